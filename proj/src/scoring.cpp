#include "entmark/scoring.hpp"

#include "entmark/utf8.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace entmark::scoring {

namespace {

// Longest common contiguous substring length, in code points.
size_t lcs_len(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    size_t best = 0;
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
                best = std::max(best, cur[j]);
            } else {
                cur[j] = 0;
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

} // namespace

std::string normalize_mention_text(std::string_view s) {
    std::string folded = utf8::ascii_fold(s);
    std::string out;
    out.reserve(folded.size());
    bool pending_space = false;
    for (char c : folded) {
        if (utf8::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

double lcs_sim(std::string_view m, std::string_view m_prime) {
    auto a = utf8::decode(normalize_mention_text(m));
    auto b = utf8::decode(normalize_mention_text(m_prime));
    if (a.empty() || b.empty()) return 0.0;
    size_t lcs = lcs_len(a, b);
    if (lcs == 0) return 0.0;
    double ra = static_cast<double>(lcs) / static_cast<double>(a.size());
    double rb = static_cast<double>(lcs) / static_cast<double>(b.size());
    return 2.0 * ra * rb / (ra + rb);
}

ClusterContext make_cluster_context(const CorefCluster& cluster,
                                    const std::vector<SourcedSpan>& h_spans,
                                    const std::vector<SourcedSpan>& el_spans) {
    ClusterContext ctx;
    ctx.cluster = &cluster;
    auto overlaps_cluster = [&cluster](const MentionSpan& span) {
        for (const auto& member : cluster.member_spans)
            if (span.overlaps(member)) return true;
        return false;
    };
    for (const auto& s : h_spans)
        if (overlaps_cluster(s.span)) ctx.hyperlink_members.push_back(s);
    for (const auto& s : el_spans)
        if (overlaps_cluster(s.span)) ctx.el_members.push_back(s);
    return ctx;
}

double coref_support(const MentionSpan& m, const SourcedSpan& m_prime, const std::string& qid) {
    if (m_prime.qid != qid) return 0.0;
    return lcs_sim(m.surface, m_prime.span.surface) * static_cast<double>(m_prime.score);
}

std::optional<double> coref_score(const MentionSpan& m, const ClusterContext& ctx,
                                  const std::string& qid) {
    if (ctx.hyperlink_members.empty() && ctx.el_members.empty()) return std::nullopt;
    // A span present in both sets counts once, as a hyperlink member.
    std::set<std::pair<int64_t, int64_t>> h_spans;
    double best = 0.0;
    for (const auto& mp : ctx.hyperlink_members) {
        h_spans.insert({mp.span.start, mp.span.end});
        best = std::max(best, coref_support(m, mp, qid));
    }
    for (const auto& mp : ctx.el_members) {
        if (h_spans.count({mp.span.start, mp.span.end})) continue;
        best = std::max(best, coref_support(m, mp, qid));
    }
    return best;
}

std::map<std::string, double> cluster_distribution(const ClusterContext& ctx) {
    // Entities the cluster supports: everything listed by an overlapping
    // H/EL mention, explicit zero scores included.
    std::set<std::string> supported;
    for (const auto& s : ctx.hyperlink_members) supported.insert(s.qid);
    for (const auto& s : ctx.el_members) supported.insert(s.qid);
    if (supported.empty()) return {};

    auto overlapping = [](const MentionSpan& member, const std::vector<SourcedSpan>& spans) {
        std::vector<const SourcedSpan*> out;
        for (const auto& s : spans)
            if (member.overlaps(s.span)) out.push_back(&s);
        return out;
    };

    std::map<std::string, double> support_sum;
    for (const auto& e : supported) support_sum[e] = 0.0;

    for (const auto& member : ctx.cluster->member_spans) {
        auto h_over = overlapping(member, ctx.hyperlink_members);
        auto el_over = overlapping(member, ctx.el_members);
        for (const auto& e : supported) {
            double m_support = 0.0;
            if (!h_over.empty()) {
                // Hyperlink member: H(m, e) is 1 iff a hyperlink for e sits in the span.
                for (const auto* s : h_over)
                    if (s->qid == e) m_support = std::max(m_support, static_cast<double>(s->score));
            } else if (!el_over.empty()) {
                for (const auto* s : el_over)
                    if (s->qid == e) m_support = std::max(m_support, static_cast<double>(s->score));
            } else {
                m_support = coref_score(member, ctx, e).value_or(0.0);
            }
            support_sum[e] += m_support;
        }
    }

    // Softmax with max subtraction.
    double max_support = 0.0;
    bool first = true;
    for (const auto& [e, v] : support_sum) {
        if (first || v > max_support) max_support = v;
        first = false;
    }
    double denom = 0.0;
    std::map<std::string, double> dist;
    for (const auto& [e, v] : support_sum) {
        double x = std::exp(v - max_support);
        dist[e] = x;
        denom += x;
    }
    for (auto& [e, v] : dist) v /= denom;
    return dist;
}

std::vector<CorefCluster> clusters_from_raw(const std::vector<Document>& documents,
                                            const std::vector<RawMention>& raw_mentions) {
    std::set<std::string> doc_ids;
    for (const auto& d : documents) doc_ids.insert(d.doc_id);

    std::map<std::pair<std::string, std::string>, CorefCluster> by_key;
    for (const auto& rm : raw_mentions) {
        if (rm.source != RawMention::Kind::Coref || !rm.cluster_id) continue;
        auto key = std::make_pair(rm.doc_id, *rm.cluster_id);
        auto& cluster = by_key[key];
        cluster.cluster_id = *rm.cluster_id;
        cluster.doc_id = rm.doc_id;
        cluster.member_spans.push_back({rm.start, rm.end, {}});
    }
    std::vector<CorefCluster> out;
    out.reserve(by_key.size());
    for (auto& [key, cluster] : by_key) {
        std::sort(cluster.member_spans.begin(), cluster.member_spans.end());
        cluster.member_spans.erase(
            std::unique(cluster.member_spans.begin(), cluster.member_spans.end()),
            cluster.member_spans.end());
        out.push_back(std::move(cluster));
    }
    return out;
}

ScoreResult score_corpus(const std::vector<Document>& documents,
                         const std::vector<RawMention>& raw_mentions,
                         const std::vector<CorefCluster>& clusters) {
    ScoreResult result;
    std::unordered_map<std::string, const Document*> docs;
    for (const auto& d : documents) docs[d.doc_id] = &d;

    struct SpanKey {
        int64_t start, end;
        bool operator<(const SpanKey& o) const {
            return start != o.start ? start < o.start : end < o.end;
        }
    };

    // Per document: merge raw rows into one mention per distinct span.
    std::map<std::string, std::map<SpanKey, Mention>> merged;
    std::map<std::string, std::vector<SourcedSpan>> h_spans, el_spans;

    for (const auto& rm : raw_mentions) {
        auto dit = docs.find(rm.doc_id);
        if (dit == docs.end()) {
            result.warnings.push_back("mention for unknown document " + rm.doc_id);
            continue;
        }
        std::string surface(utf8::cp_slice(dit->second->text, static_cast<size_t>(rm.start),
                                           static_cast<size_t>(rm.end)));
        auto& mention = merged[rm.doc_id][{rm.start, rm.end}];
        mention.span = {rm.start, rm.end, surface};

        auto candidate = [&mention](const std::string& qid) -> CandidateScore& {
            for (auto& c : mention.candidates)
                if (c.qid == qid) return c;
            mention.candidates.push_back({});
            mention.candidates.back().qid = qid;
            return mention.candidates.back();
        };

        switch (rm.source) {
            case RawMention::Kind::Hyperlink: {
                if (!rm.qid) {
                    result.warnings.push_back("hyperlink row without qid in " + rm.doc_id);
                    break;
                }
                auto& c = candidate(*rm.qid);
                c.h = 1.0f;
                c.sources |= kSourceHyperlink;
                h_spans[rm.doc_id].push_back({mention.span, *rm.qid, 1.0f});
                break;
            }
            case RawMention::Kind::EntityLinking: {
                if (!rm.qid || !rm.score) {
                    result.warnings.push_back("entity-linking row without qid/score in " + rm.doc_id);
                    break;
                }
                auto& c = candidate(*rm.qid);
                c.el = c.el ? std::max(*c.el, *rm.score) : *rm.score;
                c.sources |= kSourceEntityLinking;
                el_spans[rm.doc_id].push_back({mention.span, *rm.qid, *rm.score});
                break;
            }
            case RawMention::Kind::Coref: {
                if (rm.cluster_id && !mention.cluster_id) mention.cluster_id = *rm.cluster_id;
                break;
            }
        }
    }

    // Dedupe source spans: several rows can share (span, qid).
    auto dedupe = [](std::vector<SourcedSpan>& spans) {
        std::sort(spans.begin(), spans.end(), [](const SourcedSpan& a, const SourcedSpan& b) {
            if (a.span.start != b.span.start) return a.span.start < b.span.start;
            if (a.span.end != b.span.end) return a.span.end < b.span.end;
            if (a.qid != b.qid) return a.qid < b.qid;
            return a.score > b.score;
        });
        spans.erase(std::unique(spans.begin(), spans.end(),
                                [](const SourcedSpan& a, const SourcedSpan& b) {
                                    return a.span.start == b.span.start &&
                                           a.span.end == b.span.end && a.qid == b.qid;
                                }),
                    spans.end());
    };
    for (auto& [doc, spans] : h_spans) dedupe(spans);
    for (auto& [doc, spans] : el_spans) dedupe(spans);

    // Cluster scoring, ordered by (doc, cluster_id) for determinism.
    std::vector<const CorefCluster*> ordered;
    for (const auto& cl : clusters) ordered.push_back(&cl);
    std::sort(ordered.begin(), ordered.end(), [](const CorefCluster* a, const CorefCluster* b) {
        if (a->doc_id != b->doc_id) return a->doc_id < b->doc_id;
        return a->cluster_id < b->cluster_id;
    });

    for (const CorefCluster* cl : ordered) {
        auto mit = merged.find(cl->doc_id);
        for (const auto& member : cl->member_spans) {
            if (mit == merged.end() || !mit->second.count({member.start, member.end}))
                throw std::runtime_error("cluster " + cl->cluster_id + " references unknown span [" +
                                         std::to_string(member.start) + "," +
                                         std::to_string(member.end) + ") in " + cl->doc_id);
        }

        CorefCluster scored = *cl;
        // Fill member surfaces from the merged mentions.
        for (auto& member : scored.member_spans) {
            member.surface = mit->second.at({member.start, member.end}).span.surface;
        }
        auto ctx = make_cluster_context(scored, h_spans[cl->doc_id], el_spans[cl->doc_id]);
        ctx.cluster = &scored;
        scored.entity_distribution = cluster_distribution(ctx);

        for (const auto& member : scored.member_spans) {
            auto& mention = mit->second.at({member.start, member.end});
            if (!mention.cluster_id) mention.cluster_id = scored.cluster_id;
            for (const auto& [qid, cc] : scored.entity_distribution) {
                CandidateScore* cand = nullptr;
                for (auto& c : mention.candidates)
                    if (c.qid == qid) cand = &c;
                if (!cand) {
                    mention.candidates.push_back({});
                    cand = &mention.candidates.back();
                    cand->qid = qid;
                }
                // C only where the mention has no direct H/EL evidence for
                // this entity, and only when there is actual support.
                if (!cand->h && !cand->el) {
                    auto c_val = coref_score(member, ctx, qid);
                    if (c_val && *c_val > 0.0) {
                        float f = static_cast<float>(*c_val);
                        cand->c = cand->c ? std::max(*cand->c, f) : f;
                    }
                }
                float ccf = static_cast<float>(cc);
                cand->cc = cand->cc ? std::max(*cand->cc, ccf) : ccf;
                cand->sources |= kSourceCoref;
            }
        }
        result.clusters.push_back(std::move(scored));
    }

    for (auto& [doc_id, by_span] : merged) {
        auto& out = result.mentions_by_doc[doc_id];
        for (auto& [key, mention] : by_span) {
            if (mention.candidates.empty()) {
                result.warnings.push_back("dropping mention without candidates in " + doc_id +
                                          " at [" + std::to_string(key.start) + "," +
                                          std::to_string(key.end) + ")");
                continue;
            }
            std::sort(mention.candidates.begin(), mention.candidates.end(),
                      [](const CandidateScore& a, const CandidateScore& b) { return a.qid < b.qid; });
            out.push_back(std::move(mention));
        }
    }
    return result;
}

} // namespace entmark::scoring
