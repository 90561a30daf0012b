#pragma once
// Mention -> QID scoring. Four procedures produce the candidate lists:
//   H  — binary, a hyperlink inside the mention span
//   EL — entity linker confidence, passed through
//   C  — LCS-similarity-weighted support transferred from H/EL mentions that
//        overlap the same coreference cluster
//   CC — softmax distribution over the entities a cluster supports, shared
//        by every member of the cluster

#include "entmark/corpus.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace entmark::scoring {

// Lower-cased, trimmed, whitespace-collapsed copy used for LCS comparison.
std::string normalize_mention_text(std::string_view s);

// Harmonic mean of the longest-common-substring overlap ratios of the two
// normalized strings. Symmetric, in [0,1], 0 when either side is empty or
// nothing is shared.
double lcs_sim(std::string_view m, std::string_view m_prime);

// An H- or EL-scored mention occurrence that overlaps a cluster.
struct SourcedSpan {
    MentionSpan span;
    std::string qid;
    float score = 0.0f;  // 1 for hyperlinks, linker confidence for EL
};

struct ClusterContext {
    const CorefCluster* cluster = nullptr;
    std::vector<SourcedSpan> hyperlink_members;  // overlap the cluster, H source
    std::vector<SourcedSpan> el_members;         // overlap the cluster, EL source
};

// Builds the context from a document's H/EL mention occurrences
// (overlap = nonzero character intersection with any member span).
ClusterContext make_cluster_context(const CorefCluster& cluster,
                                    const std::vector<SourcedSpan>& h_spans,
                                    const std::vector<SourcedSpan>& el_spans);

// sim(m, m') weighted by m'-s source score (1 for hyperlinks, the linker
// confidence for EL) when m' carries the entity; 0 otherwise.
double coref_support(const MentionSpan& m, const SourcedSpan& m_prime, const std::string& qid);

// C(m, e): maximum support over the context's H/EL members. Absent when the
// member set is empty; callers treat absent as no evidence, not zero.
std::optional<double> coref_score(const MentionSpan& m, const ClusterContext& ctx,
                                  const std::string& qid);

// CC distribution: softmax of summed per-member supports over the entities
// the cluster supports. Empty map when nothing is supported.
std::map<std::string, double> cluster_distribution(const ClusterContext& ctx);

struct ScoreResult {
    std::map<std::string, std::vector<Mention>> mentions_by_doc;  // sorted by span
    std::vector<CorefCluster> clusters;  // input clusters with distributions filled
    std::vector<std::string> warnings;
};

// Merges raw annotator rows into one Mention per distinct span, computes C
// and CC, and attaches cluster scores to every member mention. Throws
// std::runtime_error when a cluster references a span absent from the raw
// mentions (corrupt input).
ScoreResult score_corpus(const std::vector<Document>& documents,
                         const std::vector<RawMention>& raw_mentions,
                         const std::vector<CorefCluster>& clusters);

// Derives membership-only clusters from COREF rows, one per (doc, cluster_id).
std::vector<CorefCluster> clusters_from_raw(const std::vector<Document>& documents,
                                            const std::vector<RawMention>& raw_mentions);

} // namespace entmark::scoring
