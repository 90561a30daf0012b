#pragma once
// Retrieval evaluation: stratified entity sampling by hyperlink count,
// judged precision@k with the sample-100-when-k>=100 rule, pairwise win
// rates between retrieval methods, and win-margin distributions. The judge
// is pluggable; tests use a ground-truth oracle, production use goes through
// an HTTP client or a replayed judgment cache.

#include "entmark/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace entmark::eval {

struct JudgeRequest {
    std::string qid;
    uint64_t chunk_id = 0;
    std::string entity_name;
    std::string entity_description;
    std::vector<std::string> windows;
};

class Judge {
public:
    virtual ~Judge() = default;
    // One Yes/No verdict per context window.
    virtual std::vector<bool> judge(const JudgeRequest& request) = 0;
};

// Pure-function judge over ground truth keyed by (qid, chunk).
class OracleJudge : public Judge {
public:
    using TruthFn = std::function<bool(const std::string& qid, uint64_t chunk_id)>;
    explicit OracleJudge(TruthFn truth) : truth_(std::move(truth)) {}
    std::vector<bool> judge(const JudgeRequest& request) override {
        return std::vector<bool>(request.windows.size(), truth_(request.qid, request.chunk_id));
    }

private:
    TruthFn truth_;
};

// Replays verdicts from a judgments.jsonl cache; throws on a miss.
class ReplayJudge : public Judge {
public:
    explicit ReplayJudge(const std::filesystem::path& judgments_file);
    std::vector<bool> judge(const JudgeRequest& request) override;

private:
    std::map<std::tuple<std::string, uint64_t, int32_t>, bool> cache_;
};

// Wraps another judge with a persistent (qid, chunk, window) cache.
class CachingJudge : public Judge {
public:
    CachingJudge(Judge& inner, std::filesystem::path cache_file);
    std::vector<bool> judge(const JudgeRequest& request) override;
    void flush() const;  // writes judgments.jsonl

private:
    Judge& inner_;
    std::filesystem::path cache_file_;
    std::map<std::tuple<std::string, uint64_t, int32_t>, bool> cache_;
};

// Posts {entity_name, entity_description, context_window} per window and
// parses a Yes/No token from the response.
class HttpJudge : public Judge {
public:
    HttpJudge(std::string host, int port, std::string path = "/judge");
    std::vector<bool> judge(const JudgeRequest& request) override;

private:
    std::string host_;
    int port_;
    std::string path_;
};

// ---------------------------------------------------------------------------
// Stratified sampling

struct BinSpec {
    std::string name;
    uint64_t min_count = 0;                   // inclusive
    std::optional<uint64_t> max_count;        // exclusive; open-ended when absent
};

// Default popularity strata: tail < 10, torso [10, 1000), head >= 1000.
std::vector<BinSpec> default_bins();
std::string bin_of(uint64_t hyperlink_count, const std::vector<BinSpec>& bins);

struct Shortfall {
    std::string bin;
    size_t requested = 0;
    size_t available = 0;
};

struct EntitySample {
    std::vector<std::string> entities;
    std::map<std::string, std::vector<std::string>> per_bin;
    std::vector<Shortfall> shortfalls;
    uint64_t seed = 0;
};

EntitySample stratified_sample(const std::map<std::string, uint64_t>& hyperlink_counts,
                               const std::vector<BinSpec>& bins,
                               const std::map<std::string, size_t>& per_bin_counts, uint64_t seed);

// ---------------------------------------------------------------------------
// Context windows

struct WindowSpan {
    int64_t start = 0;  // char span in the chunk text
    int64_t end = 0;
    double priority = 0.0;  // weighted score sum; used for entity retrieval
};

// Up to max_mentions windows of window_chars characters on each side of a
// span, clamped to the text. Entity retrieval prioritizes by score, string
// retrieval keeps document order.
std::vector<std::string> context_windows(std::string_view chunk_text,
                                         std::vector<WindowSpan> spans, bool prioritize_by_score,
                                         int64_t window_chars = 130, size_t max_mentions = 3);

// ---------------------------------------------------------------------------
// Precision / win rates

struct RetrievedChunk {
    uint64_t chunk_id = 0;
    std::vector<std::string> windows;
};

struct PrecisionResult {
    std::optional<double> precision;  // absent when nothing was retrieved
    size_t considered = 0;            // min(k, retrieved)
    size_t judged = 0;
    size_t yes = 0;
    bool sampled = false;    // sample-100 rule applied
    bool shortfall = false;  // fewer than k results
};

PrecisionResult precision_at_k(const std::vector<RetrievedChunk>& ranked, size_t k, Judge& judge,
                               const EntityRef& entity, const std::string& description,
                               uint64_t sample_seed);

struct Method {
    std::string name;
    std::function<std::vector<RetrievedChunk>(const EntityRef&)> retrieve;
};

struct PairStats {
    std::string method_a;
    std::string method_b;
    size_t wins_a = 0;
    size_t wins_b = 0;
    size_t ties = 0;
    double win_pct = 0.0;   // method_a wins
    double loss_pct = 0.0;  // method_b wins
    double tie_pct = 0.0;
};

struct WinRateReport {
    std::vector<std::string> methods;
    std::vector<std::string> entities;
    // yes_counts[method][qid] = judged-Yes chunks (capped retrieval)
    std::map<std::string, std::map<std::string, size_t>> yes_counts;
    std::vector<PairStats> pairs;  // every unordered method pair
    size_t cap = 100;
    uint64_t seed = 0;
};

WinRateReport pairwise_winrates(const std::vector<Method>& methods,
                                const std::vector<EntityRef>& entities,
                                const std::map<std::string, std::string>& descriptions,
                                Judge& judge, size_t cap = 100, uint64_t seed = 0);

struct MarginPoint {
    int64_t margin = 0;
    double cumulative_pct = 0.0;
};

// Per popularity bin: distinct margins ascending with the cumulative
// percentage of the bin's entities at or below each margin.
std::map<std::string, std::vector<MarginPoint>> winmargin_distribution(
    const std::map<std::string, int64_t>& margins_by_entity,
    const std::map<std::string, uint64_t>& hyperlink_counts, const std::vector<BinSpec>& bins);

// Seeded uniform sample without replacement of `count` items from [0, n).
std::vector<size_t> sample_without_replacement(size_t n, size_t count, uint64_t seed);

} // namespace entmark::eval
