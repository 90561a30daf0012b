#include "entmark/harness.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

using nlohmann::json;

namespace entmark::harness {

namespace {

double weighted_sum(const index::MentionScores& s, const index::RankWeights& w) {
    double sum = 0.0;
    if (s.h) sum += static_cast<double>(w.h) * *s.h;
    if (s.el) sum += static_cast<double>(w.el) * *s.el;
    if (s.c) sum += static_cast<double>(w.c) * *s.c;
    if (s.cc) sum += static_cast<double>(w.cc) * *s.cc;
    return sum;
}

} // namespace

std::vector<eval::RetrievedChunk> retrieve_entity_chunks(const index::EntityIndex& idx,
                                                         const std::string& qid,
                                                         const index::Thresholds& thresholds,
                                                         size_t k) {
    index::QuerySpec spec;
    spec.qid = qid;
    spec.thresholds = thresholds;
    spec.limit = k;
    spec.offset = 0;
    auto result = idx.query_entity(spec);

    std::vector<eval::RetrievedChunk> out;
    out.reserve(result.hits.size());
    for (const auto& hit : result.hits) {
        const Chunk* chunk = idx.chunk(hit.chunk_id);
        std::vector<eval::WindowSpan> spans;
        spans.reserve(hit.matches.size());
        for (const auto& m : hit.matches)
            spans.push_back({m.start, m.end, weighted_sum(m.scores, idx.weights())});
        out.push_back({hit.chunk_id, eval::context_windows(chunk->text, std::move(spans), true)});
    }
    return out;
}

std::vector<eval::RetrievedChunk> retrieve_string_chunks(const index::EntityIndex& idx,
                                                         index::BaselineMode mode,
                                                         const EntityRef& entity, size_t k) {
    auto hits = idx.query_string(mode, entity, k);
    std::vector<eval::RetrievedChunk> out;
    out.reserve(hits.size());
    for (const auto& hit : hits) {
        const Chunk* chunk = idx.chunk(hit.chunk_id);
        std::vector<eval::WindowSpan> spans;
        spans.reserve(hit.matches.size());
        for (const auto& [start, end] : hit.matches) spans.push_back({start, end, 0.0});
        out.push_back({hit.chunk_id, eval::context_windows(chunk->text, std::move(spans), false)});
    }
    return out;
}

eval::Method make_method(const index::EntityIndex& idx, const std::string& name,
                         const index::Thresholds& thresholds, size_t k) {
    if (name == "entity") {
        return {name, [&idx, thresholds, k](const EntityRef& e) {
                    return retrieve_entity_chunks(idx, e.qid, thresholds, k);
                }};
    }
    auto mode = index::baseline_mode_from_string(name);
    if (!mode) throw std::invalid_argument("unknown retrieval method: " + name);
    return {name, [&idx, mode, k](const EntityRef& e) {
                return retrieve_string_chunks(idx, *mode, e, k);
            }};
}

EntityRef entity_or_default(const index::EntityIndex& idx, const std::string& qid) {
    auto it = idx.entities().find(qid);
    if (it != idx.entities().end()) return it->second;
    EntityRef e;
    e.qid = qid;
    e.canonical_name = qid;
    return e;
}

json precision_report(const index::EntityIndex& idx, const std::string& method,
                      const std::vector<std::string>& qids, const std::vector<size_t>& ks,
                      const std::map<std::string, std::string>& descriptions, eval::Judge& judge,
                      const index::Thresholds& thresholds, uint64_t seed, const json& config) {
    json report;
    report["config"] = config;
    report["method"] = method;
    report["seed"] = seed;
    report["ks"] = ks;

    size_t max_k = 0;
    for (size_t k : ks) max_k = std::max(max_k, k);

    json entities = json::array();
    std::map<size_t, std::pair<double, size_t>> means;  // k -> (sum, count)
    for (const auto& qid : qids) {
        EntityRef entity = entity_or_default(idx, qid);
        auto m = make_method(idx, method, thresholds, max_k);
        auto retrieved = m.retrieve(entity);
        std::string description;
        if (auto it = descriptions.find(qid); it != descriptions.end()) description = it->second;

        json per_entity;
        per_entity["qid"] = qid;
        json per_k = json::array();
        for (size_t k : ks) {
            auto res = eval::precision_at_k(retrieved, k, judge, entity, description, seed);
            json jk;
            jk["k"] = k;
            jk["precision"] = res.precision ? json(*res.precision) : json(nullptr);
            jk["judged"] = res.judged;
            jk["yes"] = res.yes;
            jk["sampled"] = res.sampled;
            jk["shortfall"] = res.shortfall;
            per_k.push_back(std::move(jk));
            if (res.precision) {
                means[k].first += *res.precision;
                means[k].second += 1;
            }
        }
        per_entity["at_k"] = std::move(per_k);
        entities.push_back(std::move(per_entity));
    }
    report["entities"] = std::move(entities);

    json mean = json::array();
    for (const auto& [k, acc] : means) {
        json jm;
        jm["k"] = k;
        jm["mean_precision"] = acc.second ? json(acc.first / static_cast<double>(acc.second))
                                          : json(nullptr);
        jm["entities"] = acc.second;
        mean.push_back(std::move(jm));
    }
    report["mean"] = std::move(mean);
    return report;
}

json winrate_report(const index::EntityIndex& idx, const std::vector<std::string>& method_names,
                    const std::vector<std::string>& qids,
                    const std::map<std::string, std::string>& descriptions, eval::Judge& judge,
                    const index::Thresholds& thresholds, size_t cap, uint64_t seed,
                    const json& config) {
    std::vector<eval::Method> methods;
    for (const auto& name : method_names)
        methods.push_back(make_method(idx, name, thresholds, std::numeric_limits<size_t>::max()));

    std::vector<EntityRef> entities;
    for (const auto& qid : qids) entities.push_back(entity_or_default(idx, qid));

    auto result = eval::pairwise_winrates(methods, entities, descriptions, judge, cap, seed);

    json report;
    report["config"] = config;
    report["seed"] = seed;
    report["cap"] = cap;
    report["methods"] = result.methods;
    report["entities"] = result.entities;
    json pairs = json::array();
    for (const auto& p : result.pairs) {
        json jp;
        jp["a"] = p.method_a;
        jp["b"] = p.method_b;
        jp["wins_a"] = p.wins_a;
        jp["wins_b"] = p.wins_b;
        jp["ties"] = p.ties;
        jp["win_pct"] = p.win_pct;
        jp["loss_pct"] = p.loss_pct;
        jp["tie_pct"] = p.tie_pct;
        pairs.push_back(std::move(jp));
    }
    report["pairs"] = std::move(pairs);
    json yes;
    for (const auto& [method, counts] : result.yes_counts) {
        json jm;
        for (const auto& [qid, n] : counts) jm[qid] = n;
        yes[method] = std::move(jm);
    }
    report["yes_counts"] = std::move(yes);
    return report;
}

} // namespace entmark::harness
