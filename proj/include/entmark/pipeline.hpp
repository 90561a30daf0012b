#pragma once
// End-to-end pipeline driver: extract -> score -> chunk (+ step assignment)
// -> index. Stages communicate through the documented jsonl/tsv files so
// each can also run standalone from the CLI. A run's full configuration is
// serializable and embedded in every report.

#include "entmark/chunker.hpp"
#include "entmark/corpus.hpp"
#include "entmark/index.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace entmark::pipeline {

struct PipelineConfig {
    // inputs
    std::string raw_documents = "documents_raw.jsonl";
    std::string title_qid = "title_qid.tsv";
    std::string entities = "entities.tsv";
    std::string descriptions = "descriptions.tsv";
    // intermediate / outputs
    std::string documents = "documents.jsonl";
    std::string mentions = "mentions.jsonl";
    std::string unresolved = "unresolved.jsonl";
    std::string scored_mentions = "scored_mentions.jsonl";
    std::string chunks = "chunks.jsonl";
    std::string drop_report = "drop_report.jsonl";
    std::string steps = "steps.tsv";
    std::string index_dir = "index";
    // chunking / stepping
    int32_t seq_len = 512;
    std::vector<int32_t> seq_schedule;  // overrides seq_len when non-empty
    int32_t batch_size = 32;
    int32_t epochs = 1;
    std::vector<uint64_t> epoch_seeds = {1};
    // retrieval
    index::Thresholds thresholds = index::default_thresholds();
    index::RankWeights weights;
    // judging
    std::string judge = "oracle";  // oracle | replay | http
    std::string judge_host;
    int32_t judge_port = 0;
    std::string judge_path = "/judge";
    std::string judgments = "judgments.jsonl";

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json&);
    // "key = value" file; lists are comma separated.
    static PipelineConfig from_file(const std::filesystem::path&);

    std::vector<int32_t> schedule() const {
        return seq_schedule.empty() ? std::vector<int32_t>{seq_len} : seq_schedule;
    }
};

struct ExtractStats {
    size_t documents = 0;
    size_t links = 0;
    size_t resolved = 0;
    size_t unresolved = 0;
    size_t warnings = 0;
};

// documents_raw.jsonl + title_qid.tsv -> documents.jsonl + mentions.jsonl
// (hyperlink rows; appended to existing rows when append is true).
ExtractStats run_extract(const PipelineConfig& cfg, bool append_mentions = false);

struct ScoreStats {
    size_t documents = 0;
    size_t mentions = 0;
    size_t clusters = 0;
    size_t warnings = 0;
};

ScoreStats run_score(const PipelineConfig& cfg);

struct ChunkStats {
    size_t documents = 0;
    size_t chunks = 0;
    size_t dropped_mentions = 0;
    size_t step_rows = 0;
};

// Tokenizes, chunks, assigns steps; writes chunks.jsonl + steps.tsv +
// drop_report.jsonl.
ChunkStats run_chunk(const PipelineConfig& cfg);

// chunks.jsonl (+ entities.tsv, steps.tsv when present) -> index directory.
void run_index(const PipelineConfig& cfg);

// Loads the full pipeline output into a served index.
index::EntityIndex load_index(const PipelineConfig& cfg);

// Corpus statistics mirrored from the documented corpus files.
nlohmann::json corpus_stats(const PipelineConfig& cfg);

} // namespace entmark::pipeline
