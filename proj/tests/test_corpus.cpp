#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "entmark/corpus.hpp"
#include "entmark/io.hpp"
#include "entmark/utf8.hpp"
#include "support/synth.hpp"

#include <filesystem>
#include <fstream>
#include <set>

using namespace entmark;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("entmark_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Mention simple_mention(int64_t start, int64_t end, std::string surface, std::string qid,
                       float el = 0.9f) {
    Mention m;
    m.span = {start, end, std::move(surface)};
    CandidateScore c;
    c.qid = std::move(qid);
    c.el = el;
    c.sources = kSourceEntityLinking;
    m.candidates.push_back(std::move(c));
    return m;
}

} // namespace

TEST_CASE("well-formed two-document corpus validates clean") {
    std::vector<Document> docs = {{"d1", "Josh Allen plays football.", "Josh Allen"},
                                  {"d2", "Buffalo is a city.", "Buffalo"}};
    std::map<std::string, std::vector<Mention>> mentions;
    mentions["d1"].push_back(simple_mention(0, 10, "Josh Allen", "Q123"));
    mentions["d2"].push_back(simple_mention(0, 7, "Buffalo", "Q40435"));

    CorefCluster cluster;
    cluster.cluster_id = "c1";
    cluster.doc_id = "d1";
    cluster.member_spans = {{0, 10, "Josh Allen"}};
    cluster.entity_distribution = {{"Q123", 1.0}};

    auto report = validate_corpus(docs, mentions, {cluster});
    CHECK(report.ok());
    CHECK(report.violations.empty());
}

TEST_CASE("span past the end of the document is reported") {
    std::vector<Document> docs = {{"d1", "short", ""}};
    std::map<std::string, std::vector<Mention>> mentions;
    mentions["d1"].push_back(simple_mention(0, 99, "", "Q1"));
    auto report = validate_corpus(docs, mentions, {});
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == "span-out-of-range");
}

TEST_CASE("unnormalized cluster distribution is reported") {
    std::vector<Document> docs = {{"d1", "some text here", ""}};
    CorefCluster cluster;
    cluster.cluster_id = "c1";
    cluster.doc_id = "d1";
    cluster.member_spans = {{0, 4, ""}};
    cluster.entity_distribution = {{"Q1", 0.7}, {"Q2", 0.7}};
    auto report = validate_corpus(docs, {}, {cluster});
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == "distribution-not-normalized");
}

TEST_CASE("duplicate candidate qid is reported") {
    std::vector<Document> docs = {{"d1", "hello world", ""}};
    Mention m = simple_mention(0, 5, "hello", "Q1");
    m.candidates.push_back(m.candidates.front());
    std::map<std::string, std::vector<Mention>> mentions;
    mentions["d1"].push_back(m);
    auto report = validate_corpus(docs, mentions, {});
    bool found = false;
    for (const auto& v : report.violations) found |= v.kind == "duplicate-candidate-qid";
    CHECK(found);
}

TEST_CASE("surface mismatch and empty candidate list are reported") {
    std::vector<Document> docs = {{"d1", "hello world", ""}};
    std::map<std::string, std::vector<Mention>> mentions;
    mentions["d1"].push_back(simple_mention(0, 5, "nope!", "Q1"));
    Mention no_cands;
    no_cands.span = {6, 11, "world"};
    mentions["d1"].push_back(no_cands);
    auto report = validate_corpus(docs, mentions, {});
    std::set<std::string> kinds;
    for (const auto& v : report.violations) kinds.insert(v.kind);
    CHECK(kinds.count("surface-mismatch"));
    CHECK(kinds.count("empty-candidates"));
}

TEST_CASE("validation is idempotent") {
    std::vector<Document> docs = {{"d1", "abc", ""}};
    std::map<std::string, std::vector<Mention>> mentions;
    mentions["d1"].push_back(simple_mention(0, 9, "", "Q1"));
    auto first = validate_corpus(docs, mentions, {});
    auto second = validate_corpus(docs, mentions, {});
    REQUIRE(first.violations.size() == second.violations.size());
    for (size_t i = 0; i < first.violations.size(); ++i)
        CHECK(first.violations[i].kind == second.violations[i].kind);
}

TEST_CASE("offsets are code points, not bytes") {
    // "café" is 4 code points, 5 bytes.
    std::vector<Document> docs = {{"d1", "café bar", ""}};
    std::map<std::string, std::vector<Mention>> mentions;
    mentions["d1"].push_back(simple_mention(0, 4, "café", "Q1"));
    mentions["d1"].push_back(simple_mention(5, 8, "bar", "Q2"));
    auto report = validate_corpus(docs, mentions, {});
    CHECK(report.ok());
    CHECK(utf8::cp_count("café bar") == 8);
}

TEST_CASE("documents and scored mentions round-trip through jsonl") {
    auto dir = temp_dir("roundtrip");
    synth::Rng rng(42);

    std::vector<Document> docs;
    std::vector<io::DocMention> rows;
    for (int i = 0; i < 20; ++i) {
        auto rd = synth::random_document(rng, "d" + std::to_string(i), 60);
        docs.push_back(rd.doc);
        for (auto& m : rd.mentions) rows.push_back({rd.doc.doc_id, m});
    }
    io::write_documents(dir / "documents.jsonl", docs);
    io::write_scored_mentions(dir / "scored.jsonl", rows);

    CHECK(io::read_documents(dir / "documents.jsonl") == docs);
    CHECK(io::read_scored_mentions(dir / "scored.jsonl") == rows);
}

TEST_CASE("entities and steps round-trip through tsv") {
    auto dir = temp_dir("tsv");
    std::map<std::string, EntityRef> entities;
    entities["Q1"] = {"Q1", "Buffalo, New York", {"Buffalo", "The Queen City"}};
    entities["Q2"] = {"Q2", "Josh Allen", {}};
    io::write_entities(dir / "entities.tsv", entities);
    CHECK(io::read_entities(dir / "entities.tsv") == entities);

    std::vector<io::StepRow> steps = {{0, 0, 0}, {1, 0, 0}, {2, 0, 1}};
    io::write_steps(dir / "steps.tsv", steps);
    CHECK(io::read_steps(dir / "steps.tsv") == steps);
}

TEST_CASE("raw mention rows round-trip through jsonl") {
    auto dir = temp_dir("rawmentions");
    std::vector<RawMention> rows = {
        {"d1", 0, 5, RawMention::Kind::Hyperlink, "Q1", 1.0f, std::nullopt},
        {"d1", 6, 9, RawMention::Kind::EntityLinking, "Q2", 0.98f, std::nullopt},
        {"d1", 10, 14, RawMention::Kind::Coref, std::nullopt, std::nullopt, "c1"},
    };
    io::write_raw_mentions(dir / "mentions.jsonl", rows);
    CHECK(io::read_raw_mentions(dir / "mentions.jsonl") == rows);
}

TEST_CASE("chunks round-trip through jsonl") {
    auto dir = temp_dir("chunks_roundtrip");
    auto chunks = synth::random_chunks(7, 25, 10);
    io::write_chunks(dir / "chunks.jsonl", chunks);
    auto back = io::read_chunks(dir / "chunks.jsonl");
    REQUIRE(back.size() == chunks.size());
    for (size_t i = 0; i < chunks.size(); ++i) {
        CAPTURE(i);
        CHECK(back[i].chunk_id == chunks[i].chunk_id);
        CHECK(back[i].token_ids == chunks[i].token_ids);
        CHECK(back[i].text == chunks[i].text);
        REQUIRE(back[i].mentions.size() == chunks[i].mentions.size());
        for (size_t m = 0; m < chunks[i].mentions.size(); ++m) {
            CHECK(back[i].mentions[m].tok_start == chunks[i].mentions[m].tok_start);
            CHECK(back[i].mentions[m].char_start == chunks[i].mentions[m].char_start);
            CHECK(back[i].mentions[m].candidates.size() ==
                  chunks[i].mentions[m].candidates.size());
        }
    }
}

TEST_CASE("atomic write replaces content and leaves no temp file") {
    auto dir = temp_dir("atomic");
    auto path = dir / "out.txt";
    io::atomic_write(path, "first");
    io::atomic_write(path, "second");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "second");
    CHECK(!std::filesystem::exists(dir / "out.txt.tmp"));
}
