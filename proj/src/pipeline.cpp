#include "entmark/pipeline.hpp"

#include "entmark/io.hpp"
#include "entmark/scoring.hpp"
#include "entmark/utf8.hpp"
#include "entmark/wikitext.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

using nlohmann::json;

namespace entmark::pipeline {

namespace {

json thresholds_json(const index::Thresholds& t) {
    json j;
    j["h"] = t.h ? json(*t.h) : json(nullptr);
    j["el"] = t.el ? json(*t.el) : json(nullptr);
    j["c"] = t.c ? json(*t.c) : json(nullptr);
    j["cc"] = t.cc ? json(*t.cc) : json(nullptr);
    return j;
}

index::Thresholds thresholds_from_json(const json& j) {
    index::Thresholds t;
    auto get = [&j](const char* key) -> std::optional<float> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<float>();
    };
    t.h = get("h");
    t.el = get("el");
    t.c = get("c");
    t.cc = get("cc");
    return t;
}

template <typename T>
std::vector<T> parse_list(const std::string& value) {
    std::vector<T> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if constexpr (std::is_same_v<T, int32_t>)
            out.push_back(static_cast<int32_t>(std::stol(item)));
        else
            out.push_back(static_cast<T>(std::stoull(item)));
    }
    return out;
}

} // namespace

json PipelineConfig::to_json() const {
    json j;
    j["raw_documents"] = raw_documents;
    j["title_qid"] = title_qid;
    j["entities"] = entities;
    j["descriptions"] = descriptions;
    j["documents"] = documents;
    j["mentions"] = mentions;
    j["unresolved"] = unresolved;
    j["scored_mentions"] = scored_mentions;
    j["chunks"] = chunks;
    j["drop_report"] = drop_report;
    j["steps"] = steps;
    j["index_dir"] = index_dir;
    j["seq_len"] = seq_len;
    j["seq_schedule"] = seq_schedule;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["epoch_seeds"] = epoch_seeds;
    j["thresholds"] = thresholds_json(thresholds);
    j["weights"] = {{"h", weights.h}, {"el", weights.el}, {"c", weights.c}, {"cc", weights.cc}};
    j["judge"] = judge;
    j["judge_host"] = judge_host;
    j["judge_port"] = judge_port;
    j["judge_path"] = judge_path;
    j["judgments"] = judgments;
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig cfg;
    cfg.raw_documents = j.value("raw_documents", cfg.raw_documents);
    cfg.title_qid = j.value("title_qid", cfg.title_qid);
    cfg.entities = j.value("entities", cfg.entities);
    cfg.descriptions = j.value("descriptions", cfg.descriptions);
    cfg.documents = j.value("documents", cfg.documents);
    cfg.mentions = j.value("mentions", cfg.mentions);
    cfg.unresolved = j.value("unresolved", cfg.unresolved);
    cfg.scored_mentions = j.value("scored_mentions", cfg.scored_mentions);
    cfg.chunks = j.value("chunks", cfg.chunks);
    cfg.drop_report = j.value("drop_report", cfg.drop_report);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.index_dir = j.value("index_dir", cfg.index_dir);
    cfg.seq_len = j.value("seq_len", cfg.seq_len);
    cfg.seq_schedule = j.value("seq_schedule", cfg.seq_schedule);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.epoch_seeds = j.value("epoch_seeds", cfg.epoch_seeds);
    if (j.contains("thresholds")) cfg.thresholds = thresholds_from_json(j.at("thresholds"));
    if (j.contains("weights")) {
        cfg.weights.h = j.at("weights").value("h", 1.0f);
        cfg.weights.el = j.at("weights").value("el", 1.0f);
        cfg.weights.c = j.at("weights").value("c", 1.0f);
        cfg.weights.cc = j.at("weights").value("cc", 1.0f);
    }
    cfg.judge = j.value("judge", cfg.judge);
    cfg.judge_host = j.value("judge_host", cfg.judge_host);
    cfg.judge_port = j.value("judge_port", cfg.judge_port);
    cfg.judge_path = j.value("judge_path", cfg.judge_path);
    cfg.judgments = j.value("judgments", cfg.judgments);
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    PipelineConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;

        if (key == "raw_documents") cfg.raw_documents = value;
        else if (key == "title_qid") cfg.title_qid = value;
        else if (key == "entities") cfg.entities = value;
        else if (key == "descriptions") cfg.descriptions = value;
        else if (key == "documents") cfg.documents = value;
        else if (key == "mentions") cfg.mentions = value;
        else if (key == "unresolved") cfg.unresolved = value;
        else if (key == "scored_mentions") cfg.scored_mentions = value;
        else if (key == "chunks") cfg.chunks = value;
        else if (key == "drop_report") cfg.drop_report = value;
        else if (key == "steps") cfg.steps = value;
        else if (key == "index_dir") cfg.index_dir = value;
        else if (key == "seq_len") cfg.seq_len = static_cast<int32_t>(std::stol(value));
        else if (key == "seq_schedule") cfg.seq_schedule = parse_list<int32_t>(value);
        else if (key == "batch_size") cfg.batch_size = static_cast<int32_t>(std::stol(value));
        else if (key == "epochs") cfg.epochs = static_cast<int32_t>(std::stol(value));
        else if (key == "epoch_seeds") cfg.epoch_seeds = parse_list<uint64_t>(value);
        else if (key == "threshold_h") cfg.thresholds.h = std::stof(value);
        else if (key == "threshold_el") cfg.thresholds.el = std::stof(value);
        else if (key == "threshold_c") cfg.thresholds.c = std::stof(value);
        else if (key == "threshold_cc") cfg.thresholds.cc = std::stof(value);
        else if (key == "weight_h") cfg.weights.h = std::stof(value);
        else if (key == "weight_el") cfg.weights.el = std::stof(value);
        else if (key == "weight_c") cfg.weights.c = std::stof(value);
        else if (key == "weight_cc") cfg.weights.cc = std::stof(value);
        else if (key == "judge") cfg.judge = value;
        else if (key == "judge_host") cfg.judge_host = value;
        else if (key == "judge_port") cfg.judge_port = static_cast<int32_t>(std::stol(value));
        else if (key == "judge_path") cfg.judge_path = value;
        else if (key == "judgments") cfg.judgments = value;
        else throw std::runtime_error("unknown config key: " + key);
    }
    return cfg;
}

ExtractStats run_extract(const PipelineConfig& cfg, bool append_mentions) {
    ExtractStats stats;
    auto raw_docs = io::read_raw_documents(cfg.raw_documents);
    wikitext::TitleQidMap map(io::read_title_qid(cfg.title_qid));

    std::vector<Document> documents;
    std::vector<RawMention> mention_rows;
    if (append_mentions && std::filesystem::exists(cfg.mentions))
        mention_rows = io::read_raw_mentions(cfg.mentions);

    std::string unresolved_buf;
    for (const auto& rd : raw_docs) {
        ++stats.documents;
        auto extracted = wikitext::extract_hyperlinks(rd.markup);
        stats.links += extracted.links.size();
        stats.warnings += extracted.warnings.size();
        documents.push_back({rd.doc_id, extracted.clean_text, rd.title});

        auto resolved = wikitext::resolve_links(extracted.links, map);
        stats.resolved += resolved.mentions.size();
        stats.unresolved += resolved.unresolved.size();
        for (const auto& m : resolved.mentions) {
            RawMention row;
            row.doc_id = rd.doc_id;
            row.start = m.span.start;
            row.end = m.span.end;
            row.source = RawMention::Kind::Hyperlink;
            row.qid = m.candidates.front().qid;
            row.score = 1.0f;
            mention_rows.push_back(std::move(row));
        }
        for (const auto& u : resolved.unresolved) {
            json j;
            j["doc_id"] = rd.doc_id;
            j["title"] = u.target;
            j["start"] = u.start;
            j["end"] = u.end;
            unresolved_buf += j.dump();
            unresolved_buf += '\n';
        }
    }

    io::write_documents(cfg.documents, documents);
    io::write_raw_mentions(cfg.mentions, mention_rows);
    io::atomic_write(cfg.unresolved, unresolved_buf);
    return stats;
}

ScoreStats run_score(const PipelineConfig& cfg) {
    ScoreStats stats;
    auto documents = io::read_documents(cfg.documents);
    auto raw = io::read_raw_mentions(cfg.mentions);
    auto clusters = scoring::clusters_from_raw(documents, raw);
    auto result = scoring::score_corpus(documents, raw, clusters);
    stats.documents = documents.size();
    stats.clusters = result.clusters.size();
    stats.warnings = result.warnings.size();

    std::vector<io::DocMention> rows;
    for (const auto& doc : documents) {
        auto it = result.mentions_by_doc.find(doc.doc_id);
        if (it == result.mentions_by_doc.end()) continue;
        for (const auto& m : it->second) {
            rows.push_back({doc.doc_id, m});
            ++stats.mentions;
        }
    }
    io::write_scored_mentions(cfg.scored_mentions, rows);
    return stats;
}

ChunkStats run_chunk(const PipelineConfig& cfg) {
    ChunkStats stats;
    auto documents = io::read_documents(cfg.documents);
    auto mentions_by_doc = io::group_mentions(io::read_scored_mentions(cfg.scored_mentions));

    chunking::WhitespaceTokenizer tokenizer;
    auto schedule = cfg.schedule();

    std::vector<Chunk> all_chunks;
    std::string drop_buf;
    uint64_t next_id = 0;
    for (const auto& doc : documents) {
        ++stats.documents;
        auto enc = tokenizer.encode(doc.text);
        static const std::vector<Mention> kNoMentions;
        const auto* mentions = &kNoMentions;
        if (auto it = mentions_by_doc.find(doc.doc_id); it != mentions_by_doc.end())
            mentions = &it->second;

        auto plan = chunking::plan_chunks(doc.doc_id, enc.offsets, *mentions, schedule);
        for (const auto& d : plan.drop_report) {
            json j;
            j["doc_id"] = d.doc_id;
            j["char_start"] = d.char_start;
            j["char_end"] = d.char_end;
            j["tok_start"] = d.tok_start;
            j["tok_end"] = d.tok_end;
            j["reason"] = d.reason;
            drop_buf += j.dump();
            drop_buf += '\n';
            ++stats.dropped_mentions;
        }
        auto chunks = chunking::materialize_chunks(plan, doc, enc, *mentions,
                                                   tokenizer.pad_token_id(), next_id);
        next_id += chunks.size();
        for (auto& c : chunks) all_chunks.push_back(std::move(c));
    }
    stats.chunks = all_chunks.size();
    io::write_chunks(cfg.chunks, all_chunks);
    io::atomic_write(cfg.drop_report, drop_buf);

    std::vector<uint64_t> ids;
    ids.reserve(all_chunks.size());
    for (const auto& c : all_chunks) ids.push_back(c.chunk_id);
    auto assignments = chunking::assign_steps(ids, cfg.batch_size, cfg.epochs, cfg.epoch_seeds);
    std::vector<io::StepRow> rows;
    rows.reserve(assignments.size());
    for (const auto& a : assignments) rows.push_back({a.chunk_id, a.epoch, a.step});
    std::sort(rows.begin(), rows.end(), [](const io::StepRow& a, const io::StepRow& b) {
        if (a.chunk_id != b.chunk_id) return a.chunk_id < b.chunk_id;
        if (a.epoch != b.epoch) return a.epoch < b.epoch;
        return a.step < b.step;
    });
    stats.step_rows = rows.size();
    io::write_steps(cfg.steps, rows);
    return stats;
}

void run_index(const PipelineConfig& cfg) {
    auto chunks = io::read_chunks(cfg.chunks);

    // Fold first-epoch step assignments into the chunk records.
    chunking::StepsMap steps;
    if (std::filesystem::exists(cfg.steps)) {
        std::vector<chunking::StepAssignment> rows;
        for (const auto& r : io::read_steps(cfg.steps)) rows.push_back({r.chunk_id, r.epoch, r.step});
        steps = chunking::StepsMap(rows);
        for (auto& c : chunks) {
            const auto* s = steps.steps_for(c.chunk_id);
            if (s && !s->empty()) {
                c.epoch = s->front().first;
                c.step = s->front().second;
            }
        }
    }

    auto idx = index::EntityIndex::build(std::move(chunks), cfg.weights, cfg.thresholds);
    if (std::filesystem::exists(cfg.entities)) idx.set_entities(io::read_entities(cfg.entities));
    if (!steps.empty()) idx.set_steps(std::move(steps));
    idx.save(cfg.index_dir);
}

index::EntityIndex load_index(const PipelineConfig& cfg) {
    return index::EntityIndex::load(cfg.index_dir);
}

json corpus_stats(const PipelineConfig& cfg) {
    json stats;

    size_t total_mentions = 0, h_mentions = 0, el_mentions = 0, coref_mentions = 0,
           coref_cluster_mentions = 0;
    std::map<std::string, uint64_t> h_per_entity;
    std::set<std::string> mentioned_entities;
    std::set<std::string> cluster_ids;

    if (std::filesystem::exists(cfg.scored_mentions)) {
        for (const auto& dm : io::read_scored_mentions(cfg.scored_mentions)) {
            ++total_mentions;
            bool has_h = false, has_el = false, has_coref = false;
            for (const auto& c : dm.mention.candidates) {
                mentioned_entities.insert(c.qid);
                if (c.h) {
                    has_h = true;
                    ++h_per_entity[c.qid];
                }
                if (c.el) has_el = true;
                if (c.c || c.cc) has_coref = true;
            }
            if (has_h) ++h_mentions;
            if (has_el) ++el_mentions;
            if (has_coref) ++coref_mentions;
            if (dm.mention.cluster_id) {
                ++coref_cluster_mentions;
                cluster_ids.insert(*dm.mention.cluster_id);
            }
        }
    }

    size_t documents = 0;
    if (std::filesystem::exists(cfg.documents)) documents = io::read_documents(cfg.documents).size();

    size_t chunks = 0;
    uint64_t tokens = 0;
    if (std::filesystem::exists(cfg.chunks)) {
        for (const auto& c : io::read_chunks(cfg.chunks)) {
            ++chunks;
            tokens += static_cast<uint64_t>(c.content_len);
        }
    }

    size_t entities = mentioned_entities.size();
    if (std::filesystem::exists(cfg.entities)) entities = io::read_entities(cfg.entities).size();

    auto bucket = [&h_per_entity](uint64_t lo, std::optional<uint64_t> hi) {
        size_t n = 0;
        for (const auto& [qid, count] : h_per_entity)
            if (count >= lo && (!hi || count <= *hi)) ++n;
        return n;
    };

    stats["documents"] = documents;
    stats["tokens"] = tokens;
    stats["chunks"] = chunks;
    stats["entities"] = entities;
    stats["total_mentions"] = total_mentions;
    stats["hyperlink_mentions"] = h_mentions;
    stats["entity_linking_mentions"] = el_mentions;
    stats["coref_mentions"] = coref_mentions;
    stats["coref_cluster_mentions"] = coref_cluster_mentions;
    stats["coref_clusters"] = cluster_ids.size();
    stats["entities_h_eq_1"] = bucket(1, 1);
    stats["entities_h_2_10"] = bucket(2, 10);
    stats["entities_h_11_100"] = bucket(11, 100);
    stats["entities_h_101_1k"] = bucket(101, 1000);
    stats["entities_h_gt_1k"] = bucket(1001, std::nullopt);
    return stats;
}

} // namespace entmark::pipeline
