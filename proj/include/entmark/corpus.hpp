#pragma once
// Shared data model: documents, entity mentions with per-source confidence
// scores, coreference clusters, and training chunks. Everything here is a
// plain value type, immutable by convention once a pipeline stage emits it.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace entmark {

struct EntityRef {
    std::string qid;            // "Q" + digits
    std::string canonical_name;
    std::vector<std::string> aliases;

    // Expanded baselines match {canonical_name} ∪ aliases.
    std::vector<std::string> expanded_names() const {
        std::vector<std::string> out;
        out.push_back(canonical_name);
        for (const auto& a : aliases) out.push_back(a);
        return out;
    }

    bool operator==(const EntityRef&) const = default;
};

struct Document {
    std::string doc_id;
    std::string text;
    std::string source_title;

    bool operator==(const Document&) const = default;
};

// Character span, end-exclusive, in code point units.
struct MentionSpan {
    int64_t start = 0;
    int64_t end = 0;
    std::string surface;

    bool operator==(const MentionSpan&) const = default;
    bool operator<(const MentionSpan& o) const {
        if (start != o.start) return start < o.start;
        return end < o.end;
    }
    bool overlaps(const MentionSpan& o) const { return start < o.end && o.start < end; }
};

enum Source : uint8_t {
    kSourceHyperlink = 1,
    kSourceEntityLinking = 2,
    kSourceCoref = 4,
};
using SourceMask = uint8_t;

// One candidate entity for a mention, with whichever of the four scores its
// sources produced. h is binary; el/c/cc live in [0,1]. Stored as float32.
struct CandidateScore {
    std::string qid;
    std::optional<float> h;
    std::optional<float> el;
    std::optional<float> c;
    std::optional<float> cc;
    SourceMask sources = 0;

    bool has_any_score() const { return h || el || c || cc; }
    bool operator==(const CandidateScore&) const = default;
};

struct Mention {
    MentionSpan span;
    std::vector<CandidateScore> candidates;
    std::optional<std::string> cluster_id;

    const CandidateScore* candidate_for(const std::string& qid) const {
        for (const auto& c : candidates)
            if (c.qid == qid) return &c;
        return nullptr;
    }
    bool operator==(const Mention&) const = default;
};

struct CorefCluster {
    std::string cluster_id;
    std::string doc_id;
    std::vector<MentionSpan> member_spans;
    // Softmax distribution over entities supported by the cluster (CC).
    // Kept in double so the sum-to-one invariant survives wide clusters.
    std::map<std::string, double> entity_distribution;

    bool operator==(const CorefCluster&) const = default;
};

// Mention carried by a chunk: token-unit span within the chunk plus the
// matching character span within the chunk text (both chunk-relative).
struct ChunkMention {
    int32_t tok_start = 0;
    int32_t tok_end = 0;   // exclusive
    int64_t char_start = 0;
    int64_t char_end = 0;  // exclusive, code points into Chunk::text
    std::vector<CandidateScore> candidates;
    std::optional<std::string> cluster_id;

    const CandidateScore* candidate_for(const std::string& qid) const {
        for (const auto& c : candidates)
            if (c.qid == qid) return &c;
        return nullptr;
    }
    bool operator==(const ChunkMention&) const = default;
};

struct Chunk {
    uint64_t chunk_id = 0;
    std::string doc_id;
    std::vector<int64_t> token_ids;  // fixed target length, trailing padding
    int32_t content_len = 0;         // non-padding prefix length
    std::vector<ChunkMention> mentions;
    int32_t step = -1;   // first-epoch step; -1 before assignment
    int32_t epoch = -1;
    std::string text;    // document text covered by the content tokens

    bool operator==(const Chunk&) const = default;
};

// Raw annotator output, one row of mentions.jsonl.
struct RawMention {
    enum class Kind { Hyperlink, EntityLinking, Coref };
    std::string doc_id;
    int64_t start = 0;
    int64_t end = 0;
    Kind source = Kind::Hyperlink;
    std::optional<std::string> qid;
    std::optional<float> score;
    std::optional<std::string> cluster_id;

    bool operator==(const RawMention&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    std::string kind;    // e.g. "span-out-of-range"
    std::string where;   // doc id / cluster id / qid
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Checks every model invariant and reports violations; never throws.
ValidationReport validate_corpus(const std::vector<Document>& documents,
                                 const std::map<std::string, std::vector<Mention>>& mentions_by_doc,
                                 const std::vector<CorefCluster>& clusters);

} // namespace entmark
