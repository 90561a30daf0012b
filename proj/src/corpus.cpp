#include "entmark/corpus.hpp"

#include "entmark/utf8.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

namespace entmark {

namespace {

bool valid_qid(const std::string& qid) {
    if (qid.size() < 2 || qid[0] != 'Q') return false;
    for (size_t i = 1; i < qid.size(); ++i)
        if (qid[i] < '0' || qid[i] > '9') return false;
    return true;
}

std::string span_str(const MentionSpan& s) {
    std::ostringstream os;
    os << "[" << s.start << "," << s.end << ")";
    return os.str();
}

} // namespace

ValidationReport validate_corpus(const std::vector<Document>& documents,
                                 const std::map<std::string, std::vector<Mention>>& mentions_by_doc,
                                 const std::vector<CorefCluster>& clusters) {
    ValidationReport report;
    auto add = [&report](std::string kind, std::string where, std::string detail) {
        report.violations.push_back({std::move(kind), std::move(where), std::move(detail)});
    };

    std::unordered_map<std::string, const Document*> docs;
    for (const auto& d : documents) {
        if (!docs.emplace(d.doc_id, &d).second)
            add("duplicate-doc-id", d.doc_id, "document id repeats");
    }
    std::unordered_map<std::string, int64_t> doc_len;
    auto len_of = [&](const std::string& doc_id) -> int64_t {
        auto it = doc_len.find(doc_id);
        if (it != doc_len.end()) return it->second;
        auto dit = docs.find(doc_id);
        int64_t n = dit == docs.end() ? -1 : static_cast<int64_t>(utf8::cp_count(dit->second->text));
        doc_len.emplace(doc_id, n);
        return n;
    };

    auto check_span = [&](const std::string& doc_id, const MentionSpan& span, bool check_surface) {
        auto dit = docs.find(doc_id);
        if (dit == docs.end()) {
            add("unknown-doc", doc_id, "mention references missing document");
            return;
        }
        int64_t n = len_of(doc_id);
        if (span.start < 0 || span.start >= span.end || span.end > n) {
            add("span-out-of-range", doc_id,
                span_str(span) + " vs document length " + std::to_string(n));
            return;
        }
        if (check_surface) {
            auto slice = utf8::cp_slice(dit->second->text, static_cast<size_t>(span.start),
                                        static_cast<size_t>(span.end));
            if (!span.surface.empty() && span.surface != slice)
                add("surface-mismatch", doc_id,
                    span_str(span) + " surface \"" + span.surface + "\" != \"" +
                        std::string(slice) + "\"");
        }
    };

    for (const auto& [doc_id, mentions] : mentions_by_doc) {
        for (const auto& m : mentions) {
            check_span(doc_id, m.span, true);
            if (m.candidates.empty())
                add("empty-candidates", doc_id, span_str(m.span) + " has no candidate entities");
            std::set<std::string> seen;
            for (const auto& c : m.candidates) {
                if (!valid_qid(c.qid)) add("bad-qid", doc_id, c.qid);
                if (!seen.insert(c.qid).second)
                    add("duplicate-candidate-qid", doc_id,
                        span_str(m.span) + " lists " + c.qid + " twice");
                if (!c.has_any_score())
                    add("no-scores", doc_id, span_str(m.span) + " candidate " + c.qid);
                if (c.h && *c.h != 0.0f && *c.h != 1.0f)
                    add("h-not-binary", doc_id, std::to_string(*c.h));
                for (auto [name, v] : {std::pair{"el", c.el}, {"c", c.c}, {"cc", c.cc}}) {
                    if (v && (*v < 0.0f || *v > 1.0f))
                        add("score-out-of-range", doc_id,
                            std::string(name) + "=" + std::to_string(*v));
                }
            }
        }
    }

    for (const auto& cl : clusters) {
        if (cl.member_spans.empty())
            add("empty-cluster", cl.cluster_id, "cluster has no member spans");
        for (const auto& span : cl.member_spans) check_span(cl.doc_id, span, false);
        if (!cl.entity_distribution.empty()) {
            double sum = 0.0;
            for (const auto& [qid, v] : cl.entity_distribution) {
                sum += v;
                if (!valid_qid(qid)) add("bad-qid", cl.cluster_id, qid);
            }
            if (std::fabs(sum - 1.0) > 1e-6)
                add("distribution-not-normalized", cl.cluster_id,
                    "sums to " + std::to_string(sum));
        }
    }

    return report;
}

} // namespace entmark
