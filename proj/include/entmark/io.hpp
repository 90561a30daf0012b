#pragma once
// Readers and writers for every on-disk format the pipeline speaks:
// documents.jsonl, documents_raw.jsonl, mentions.jsonl, entities.tsv,
// title_qid.tsv, scored_mentions.jsonl, chunks.jsonl, steps.tsv,
// descriptions.tsv, facts.tsv, answers.jsonl, judgments.jsonl.
// All writes go through atomic_write (temp file + rename).

#include "entmark/corpus.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace entmark::io {

struct RawDocument {
    std::string doc_id;
    std::string title;
    std::string markup;
    bool operator==(const RawDocument&) const = default;
};

struct StepRow {
    uint64_t chunk_id = 0;
    int32_t epoch = 0;
    int32_t step = 0;
    bool operator==(const StepRow&) const = default;
};

struct AnswerRow {
    int64_t step = 0;
    std::string question_id;
    bool correct = false;
    bool operator==(const AnswerRow&) const = default;
};

struct FactRow {
    std::string question_id;
    std::string subject_qid;
    std::string answer_qid;
    bool operator==(const FactRow&) const = default;
};

struct JudgmentRow {
    std::string qid;
    uint64_t chunk_id = 0;
    int32_t window_index = 0;
    bool yes = false;
    bool operator==(const JudgmentRow&) const = default;
};

// Scored mention row carries the owning document id alongside the mention.
struct DocMention {
    std::string doc_id;
    Mention mention;
    bool operator==(const DocMention&) const = default;
};

void atomic_write(const std::filesystem::path& path, const std::string& content);

// jsonl
std::vector<Document> read_documents(const std::filesystem::path&);
void write_documents(const std::filesystem::path&, const std::vector<Document>&);

std::vector<RawDocument> read_raw_documents(const std::filesystem::path&);
void write_raw_documents(const std::filesystem::path&, const std::vector<RawDocument>&);

std::vector<RawMention> read_raw_mentions(const std::filesystem::path&);
void write_raw_mentions(const std::filesystem::path&, const std::vector<RawMention>&);

std::vector<DocMention> read_scored_mentions(const std::filesystem::path&);
void write_scored_mentions(const std::filesystem::path&, const std::vector<DocMention>&);

std::vector<Chunk> read_chunks(const std::filesystem::path&);
void write_chunks(const std::filesystem::path&, const std::vector<Chunk>&);

std::vector<AnswerRow> read_answers(const std::filesystem::path&);
void write_answers(const std::filesystem::path&, const std::vector<AnswerRow>&);

std::vector<JudgmentRow> read_judgments(const std::filesystem::path&);
void write_judgments(const std::filesystem::path&, const std::vector<JudgmentRow>&);

// tsv
std::map<std::string, EntityRef> read_entities(const std::filesystem::path&);
void write_entities(const std::filesystem::path&, const std::map<std::string, EntityRef>&);

std::map<std::string, std::string> read_title_qid(const std::filesystem::path&);
void write_title_qid(const std::filesystem::path&, const std::map<std::string, std::string>&);

std::vector<StepRow> read_steps(const std::filesystem::path&);
void write_steps(const std::filesystem::path&, const std::vector<StepRow>&);

std::map<std::string, std::string> read_descriptions(const std::filesystem::path&);
void write_descriptions(const std::filesystem::path&, const std::map<std::string, std::string>&);

std::vector<FactRow> read_facts(const std::filesystem::path&);
void write_facts(const std::filesystem::path&, const std::vector<FactRow>&);

// Groups scored mention rows by document, preserving row order.
std::map<std::string, std::vector<Mention>> group_mentions(const std::vector<DocMention>&);

} // namespace entmark::io
