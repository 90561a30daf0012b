#pragma once
// Immutable inverted index over chunks, keyed by entity QID. Retrieval
// filters candidates against per-score thresholds (a chunk matches when at
// least one mention candidate passes at least one threshold) and ranks by
// the best weighted-average score among matching mentions, chunk id
// ascending on ties. Also serves the four string-match baseline modes and
// the step/co-occurrence bookkeeping queries.

#include "entmark/chunker.hpp"
#include "entmark/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace entmark::index {

struct Thresholds {
    std::optional<float> h;   // must be 1 when set
    std::optional<float> el;  // minimums
    std::optional<float> c;
    std::optional<float> cc;

    bool any() const { return h || el || c || cc; }
    bool passes(const CandidateScore& cand) const {
        if (h && cand.h && *cand.h >= *h) return true;
        if (el && cand.el && *cand.el >= *el) return true;
        if (c && cand.c && *cand.c >= *c) return true;
        if (cc && cand.cc && *cand.cc >= *cc) return true;
        return false;
    }
    bool operator==(const Thresholds&) const = default;
};

// Retrieval defaults: H = 1, EL = C = CC = 0.6.
inline Thresholds default_thresholds() { return {1.0f, 0.6f, 0.6f, 0.6f}; }

struct RankWeights {
    float h = 1.0f;
    float el = 1.0f;
    float c = 1.0f;
    float cc = 1.0f;
    bool operator==(const RankWeights&) const = default;
};

struct MentionScores {
    std::optional<float> h, el, c, cc;
    bool operator==(const MentionScores&) const = default;
};

// Weighted average of the scores that are present, weights renormalized.
double rank_mention(const MentionScores& scores, const RankWeights& weights);
// Highest aggregated score among the matching mentions of a chunk.
double rank_chunk(const std::vector<MentionScores>& matching_mentions, const RankWeights& weights);

struct PostingMention {
    uint32_t mention_index = 0;  // into Chunk::mentions
    MentionScores scores;        // candidate scores for the posting's qid
};

struct PostingsEntry {
    uint64_t chunk_id = 0;
    std::vector<PostingMention> mentions;
    float rank_score = 0.0f;  // default-weight score over all listed mentions
};

struct QuerySpec {
    std::string qid;
    Thresholds thresholds;
    size_t limit = 20;
    size_t offset = 0;
};

struct Match {
    int64_t start = 0;  // char span in chunk text
    int64_t end = 0;
    std::string qid;
    MentionScores scores;
};

struct Hit {
    uint64_t chunk_id = 0;
    double rank_score = 0.0;
    std::vector<Match> matches;
};

struct QueryResult {
    uint64_t total = 0;  // exact hit count before pagination
    std::vector<Hit> hits;
};

enum class BaselineMode { CsCanonical, CsExpanded, CiCanonical, CiExpanded };

std::optional<BaselineMode> baseline_mode_from_string(std::string_view);
std::string to_string(BaselineMode);

struct StringHit {
    uint64_t chunk_id = 0;
    std::vector<std::pair<int64_t, int64_t>> matches;  // char spans in chunk text
};

class EntityIndex {
public:
    EntityIndex() = default;

    // Throws on duplicate chunk ids.
    static EntityIndex build(std::vector<Chunk> chunks, RankWeights weights = {},
                             Thresholds defaults = default_thresholds());

    QueryResult query_entity(const QuerySpec& spec) const;

    std::vector<StringHit> query_string(BaselineMode mode, const EntityRef& entity, size_t k,
                                        bool word_boundary = false) const;

    // Sorted, de-duplicated (epoch, step) pairs over the matching chunks.
    std::vector<std::pair<int32_t, int32_t>> steps_for_entity(const std::string& qid,
                                                              const Thresholds& thresholds) const;

    uint64_t cooccur_count(const std::string& qid_a, const std::string& qid_b,
                           const Thresholds& thresholds) const;
    // Chunk ids with at least one passing candidate for the qid, ascending.
    std::vector<uint64_t> matching_chunks(const std::string& qid,
                                          const Thresholds& thresholds) const;

    const Chunk* chunk(uint64_t chunk_id) const;
    const std::vector<Chunk>& chunks() const { return chunks_; }
    const std::map<std::string, std::vector<PostingsEntry>>& postings() const { return postings_; }

    const std::map<std::string, EntityRef>& entities() const { return entities_; }
    void set_entities(std::map<std::string, EntityRef> entities) { entities_ = std::move(entities); }
    const chunking::StepsMap& steps() const { return steps_; }
    void set_steps(chunking::StepsMap steps) { steps_ = std::move(steps); }

    const Thresholds& default_query_thresholds() const { return defaults_; }
    const RankWeights& weights() const { return weights_; }
    const std::string& corpus_hash() const { return corpus_hash_; }

    // Hyperlink-mention count per entity (popularity proxy for sampling).
    std::map<std::string, uint64_t> hyperlink_counts() const;

    // Persistence: manifest.json + postings.bin + chunks.bin (+ entities.tsv
    // and steps.tsv when present). Rebuilding from identical input yields
    // byte-identical files.
    void save(const std::filesystem::path& dir) const;
    static EntityIndex load(const std::filesystem::path& dir);

private:
    std::vector<Chunk> chunks_;  // ascending chunk_id
    std::map<uint64_t, size_t> by_id_;
    std::map<std::string, std::vector<PostingsEntry>> postings_;
    std::vector<std::string> folded_texts_;  // ascii-folded chunk texts
    std::map<std::string, EntityRef> entities_;
    chunking::StepsMap steps_;
    Thresholds defaults_ = default_thresholds();
    RankWeights weights_;
    std::string corpus_hash_;
};

} // namespace entmark::index
