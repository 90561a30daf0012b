#pragma once
// Tokenizes documents and packs them into fixed-length, single-document
// chunks. A chunk never splits an annotated mention: packing terminates just
// before the mention's first token and pads the deficit. Mentions longer
// than the target length are split anyway and dropped from the annotations,
// with the loss recorded in a drop report.

#include "entmark/corpus.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace entmark::chunking {

struct TokenSpan {
    int64_t start = 0;  // char offsets (code points), end-exclusive
    int64_t end = 0;
};

struct Encoding {
    std::vector<int64_t> ids;
    std::vector<TokenSpan> offsets;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual Encoding encode(std::string_view text) const = 0;
    virtual int64_t pad_token_id() const = 0;
    virtual std::string vocab() const = 0;
};

// Maximal non-whitespace runs; token ids are stable 31-bit hashes of the
// token text. Good enough for every chunking property the pipeline needs.
class WhitespaceTokenizer : public Tokenizer {
public:
    Encoding encode(std::string_view text) const override;
    int64_t pad_token_id() const override { return -1; }
    std::string vocab() const override { return "whitespace-fnv1a"; }
};

struct TokRange {
    int32_t start = 0;  // token indices, end-exclusive; empty when start == end
    int32_t end = 0;
    bool empty() const { return start >= end; }
};

// Token range covered by a mention: every token whose character range
// intersects the mention span.
std::vector<TokRange> mention_token_ranges(const std::vector<TokenSpan>& offsets,
                                           const std::vector<Mention>& mentions);

struct ChunkBoundary {
    int32_t tok_start = 0;
    int32_t tok_end = 0;     // exclusive
    int32_t target_len = 0;  // pad to this many tokens
};

struct DropRecord {
    std::string doc_id;
    int64_t char_start = 0;
    int64_t char_end = 0;
    int32_t tok_start = 0;
    int32_t tok_end = 0;
    std::string reason;
};

struct ChunkPlan {
    std::string doc_id;
    std::vector<ChunkBoundary> boundaries;
    std::vector<size_t> dropped_mentions;  // indexes into the mentions argument
    std::vector<DropRecord> drop_report;
};

// Greedy left-to-right packing at a fixed target length.
ChunkPlan plan_chunks(const std::string& doc_id, const std::vector<TokenSpan>& token_offsets,
                      const std::vector<Mention>& mentions, int32_t seq_len);

// Variable-length variant: chunk i of a document targets schedule[i % size].
ChunkPlan plan_chunks(const std::string& doc_id, const std::vector<TokenSpan>& token_offsets,
                      const std::vector<Mention>& mentions, const std::vector<int32_t>& schedule);

// Fills token ids, pads, re-bases mention spans to chunk-local units and
// slices the covered text. chunk_ids start at first_chunk_id.
std::vector<Chunk> materialize_chunks(const ChunkPlan& plan, const Document& doc,
                                      const Encoding& encoding,
                                      const std::vector<Mention>& mentions, int64_t pad_token_id,
                                      uint64_t first_chunk_id);

struct StepAssignment {
    uint64_t chunk_id = 0;
    int32_t epoch = 0;
    int32_t step = 0;
};

// Seeded per-epoch permutation, then step = position / batch_size. The
// shuffle is hand-rolled Fisher-Yates over splitmix64 so assignments are
// identical across platforms.
std::vector<StepAssignment> assign_steps(const std::vector<uint64_t>& chunk_ids,
                                         int32_t batch_size, int32_t epochs,
                                         const std::vector<uint64_t>& epoch_seeds);

// Step layout for a fixed chunk order; exposed for tests.
std::vector<StepAssignment> steps_from_order(const std::vector<uint64_t>& ordered_ids,
                                             int32_t batch_size, int32_t epoch);

// Deterministic permutation of [0, n) for a seed.
std::vector<size_t> seeded_permutation(size_t n, uint64_t seed);

// Chunk -> (epoch, step) lookups plus the inverse, built from steps.tsv rows.
class StepsMap {
public:
    StepsMap() = default;
    explicit StepsMap(const std::vector<StepAssignment>& rows);

    const std::vector<std::pair<int32_t, int32_t>>* steps_for(uint64_t chunk_id) const;
    const std::vector<uint64_t>* chunks_for(int32_t epoch, int32_t step) const;
    int32_t epochs() const { return epochs_; }
    int32_t steps_per_epoch() const { return steps_per_epoch_; }
    int64_t global_step(int32_t epoch, int32_t step) const {
        return static_cast<int64_t>(epoch) * steps_per_epoch_ + step;
    }
    std::vector<StepAssignment> rows() const;
    bool empty() const { return by_chunk_.empty(); }

private:
    std::map<uint64_t, std::vector<std::pair<int32_t, int32_t>>> by_chunk_;
    std::map<std::pair<int32_t, int32_t>, std::vector<uint64_t>> by_step_;
    int32_t epochs_ = 0;
    int32_t steps_per_epoch_ = 0;
};

} // namespace entmark::chunking
