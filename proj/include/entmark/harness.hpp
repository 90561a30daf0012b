#pragma once
// Glue between the index and the evaluation harness: turns index query
// results into judgable retrieved chunks (with context windows) and builds
// the precision/win-rate reports the CLI writes.

#include "entmark/eval.hpp"
#include "entmark/index.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace entmark::harness {

// All chunks matching the entity under the thresholds, ranked, with up to
// three 130-char context windows each (spans prioritized by weighted score
// sum).
std::vector<eval::RetrievedChunk> retrieve_entity_chunks(const index::EntityIndex& idx,
                                                         const std::string& qid,
                                                         const index::Thresholds& thresholds,
                                                         size_t k);

// String-baseline retrieval; windows follow document order.
std::vector<eval::RetrievedChunk> retrieve_string_chunks(const index::EntityIndex& idx,
                                                         index::BaselineMode mode,
                                                         const EntityRef& entity, size_t k);

// method name: "entity" or a baseline mode string.
eval::Method make_method(const index::EntityIndex& idx, const std::string& name,
                         const index::Thresholds& thresholds, size_t k);

nlohmann::json precision_report(const index::EntityIndex& idx, const std::string& method,
                                const std::vector<std::string>& qids,
                                const std::vector<size_t>& ks,
                                const std::map<std::string, std::string>& descriptions,
                                eval::Judge& judge, const index::Thresholds& thresholds,
                                uint64_t seed, const nlohmann::json& config);

nlohmann::json winrate_report(const index::EntityIndex& idx,
                              const std::vector<std::string>& method_names,
                              const std::vector<std::string>& qids,
                              const std::map<std::string, std::string>& descriptions,
                              eval::Judge& judge, const index::Thresholds& thresholds, size_t cap,
                              uint64_t seed, const nlohmann::json& config);

// Looks the entity up in the index table; falls back to a bare reference
// whose canonical name is the qid itself.
EntityRef entity_or_default(const index::EntityIndex& idx, const std::string& qid);

} // namespace entmark::harness
