#include "entmark/cli.hpp"

#include "entmark/corpus.hpp"
#include "entmark/eval.hpp"
#include "entmark/facts.hpp"
#include "entmark/harness.hpp"
#include "entmark/index.hpp"
#include "entmark/io.hpp"
#include "entmark/pipeline.hpp"
#include "entmark/scoring.hpp"
#include "entmark/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <memory>

using nlohmann::json;

namespace entmark::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
    if (!std::filesystem::exists(path)) throw UsageError("missing input file: " + path);
}

// Threshold flags shared by the query-style commands. Values of -1 mean
// "not set"; with no flags at all the index defaults apply.
struct ThresholdFlags {
    float h = -1.0f, el = -1.0f, c = -1.0f, cc = -1.0f;

    void attach(CLI::App* cmd) {
        cmd->set_help_flag("--help", "print help and exit");  // frees up -h / --h
        cmd->add_option("--h", h, "hyperlink threshold (must be 1 when set)");
        cmd->add_option("--el", el, "entity-linking score minimum");
        cmd->add_option("--c", c, "coref score minimum");
        cmd->add_option("--cc", cc, "cluster score minimum");
    }
    index::Thresholds resolve(const index::Thresholds& defaults) const {
        index::Thresholds t;
        if (h >= 0.0f) t.h = h;
        if (el >= 0.0f) t.el = el;
        if (c >= 0.0f) t.c = c;
        if (cc >= 0.0f) t.cc = cc;
        return t.any() ? t : defaults;
    }
};

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::unique_ptr<eval::Judge> make_judge(const index::EntityIndex& idx, const std::string& kind,
                                        const std::string& judgments, const std::string& host,
                                        int port, const std::string& path) {
    if (kind == "oracle") {
        // Ground truth: the chunk carries a candidate for the qid at all.
        return std::make_unique<eval::OracleJudge>([&idx](const std::string& qid, uint64_t chunk_id) {
            const Chunk* c = idx.chunk(chunk_id);
            if (!c) return false;
            for (const auto& m : c->mentions)
                if (m.candidate_for(qid)) return true;
            return false;
        });
    }
    if (kind == "replay") {
        require_file(judgments);
        return std::make_unique<eval::ReplayJudge>(judgments);
    }
    if (kind == "http") {
        if (host.empty() || port <= 0) throw UsageError("http judge needs --judge-host/--judge-port");
        return std::make_unique<eval::HttpJudge>(host, port, path);
    }
    throw UsageError("unknown judge: " + kind);
}

// Entities come either from an explicit --qids list or from a stratified
// sample over the index's hyperlink counts ("tail:20,torso:20,head:10").
std::vector<std::string> resolve_eval_entities(const index::EntityIndex& idx,
                                               const std::string& qids_csv,
                                               const std::string& sample_spec, uint64_t seed) {
    if (!sample_spec.empty()) {
        std::map<std::string, size_t> want;
        for (const auto& part : split_csv(sample_spec)) {
            auto colon = part.find(':');
            if (colon == std::string::npos) throw UsageError("bad --sample element: " + part);
            want[part.substr(0, colon)] = std::stoull(part.substr(colon + 1));
        }
        auto sample =
            eval::stratified_sample(idx.hyperlink_counts(), eval::default_bins(), want, seed);
        if (sample.entities.empty()) throw UsageError("stratified sample selected no entities");
        return sample.entities;
    }
    auto qids = split_csv(qids_csv);
    if (qids.empty()) throw UsageError("provide --qids or --sample");
    return qids;
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"entity-annotated corpus indexing and retrieval"};
    app.require_subcommand(1);

    // The config file loads first; explicit flags override its values.
    pipeline::PipelineConfig cfg;
    for (size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
        if (!path.empty()) {
            require_file(path);
            cfg = pipeline::PipelineConfig::from_file(path);
            break;
        }
    }
    std::string config_file;
    app.add_option("--config", config_file, "key = value config file");

    // ---- extract
    auto* extract = app.add_subcommand("extract", "extract hyperlinks from raw markup");
    bool append_mentions = false;
    extract->add_option("--raw", cfg.raw_documents, "documents_raw.jsonl");
    extract->add_option("--title-qid", cfg.title_qid, "title_qid.tsv");
    extract->add_option("--out-documents", cfg.documents, "clean documents.jsonl");
    extract->add_option("--out-mentions", cfg.mentions, "mentions.jsonl (H rows)");
    extract->add_option("--unresolved", cfg.unresolved, "unresolved link report");
    extract->add_flag("--append", append_mentions, "keep existing mention rows");

    // ---- score
    auto* score = app.add_subcommand("score", "compute H/EL/C/CC candidate scores");
    score->add_option("--documents", cfg.documents);
    score->add_option("--mentions", cfg.mentions);
    score->add_option("--out", cfg.scored_mentions, "scored_mentions.jsonl");

    // ---- chunk
    auto* chunk = app.add_subcommand("chunk", "tokenize, chunk, and assign training steps");
    chunk->add_option("--documents", cfg.documents);
    chunk->add_option("--scored-mentions", cfg.scored_mentions);
    chunk->add_option("--out", cfg.chunks, "chunks.jsonl");
    chunk->add_option("--drop-report", cfg.drop_report);
    chunk->add_option("--steps-out", cfg.steps, "steps.tsv");
    chunk->add_option("--seq-len", cfg.seq_len);
    chunk->add_option("--batch-size", cfg.batch_size);
    chunk->add_option("--epochs", cfg.epochs);
    std::string seeds_csv;
    chunk->add_option("--seeds", seeds_csv, "comma-separated epoch seeds");

    // ---- index
    auto* index_cmd = app.add_subcommand("index", "build the entity index directory");
    index_cmd->add_option("--chunks", cfg.chunks);
    index_cmd->add_option("--entities", cfg.entities);
    index_cmd->add_option("--steps", cfg.steps);
    index_cmd->add_option("--out", cfg.index_dir, "index directory");

    // ---- query
    auto* query = app.add_subcommand("query", "ranked retrieval from a committed index");
    std::string qid, mode = "entity", out_path;
    size_t limit = 20, offset = 0;
    ThresholdFlags query_thresholds;
    query->add_option("--index", cfg.index_dir);
    query->add_option("--qid", qid)->required();
    query->add_option("--mode", mode, "entity|cs-canonical|cs-expanded|ci-canonical|ci-expanded");
    query->add_option("--limit", limit);
    query->add_option("--offset", offset);
    query->add_option("--out", out_path, "write JSONL here instead of stdout");
    query_thresholds.attach(query);

    // ---- steps
    auto* steps_cmd = app.add_subcommand("steps", "training steps that introduce an entity");
    std::string steps_qid;
    ThresholdFlags steps_thresholds;
    steps_cmd->add_option("--index", cfg.index_dir);
    steps_cmd->add_option("--qid", steps_qid)->required();
    steps_thresholds.attach(steps_cmd);

    // ---- cooccur
    auto* cooccur = app.add_subcommand("cooccur", "chunks where two entities co-occur");
    std::string qid_a, qid_b;
    ThresholdFlags cooccur_thresholds;
    cooccur->add_option("--index", cfg.index_dir);
    cooccur->add_option("--a", qid_a)->required();
    cooccur->add_option("--b", qid_b)->required();
    cooccur_thresholds.attach(cooccur);

    // ---- eval-precision
    auto* evalp = app.add_subcommand("eval-precision", "judged precision at k");
    std::string evalp_qids, evalp_ks = "1,5,10,100", evalp_method = "entity", evalp_sample;
    std::string evalp_out = "precision_report.json";
    uint64_t evalp_seed = 0;
    ThresholdFlags evalp_thresholds;
    evalp->add_option("--index", cfg.index_dir);
    evalp->add_option("--qids", evalp_qids, "comma-separated entity qids");
    evalp->add_option("--sample", evalp_sample,
                      "stratified sample instead of --qids, e.g. tail:20,torso:20,head:10");
    evalp->add_option("--ks", evalp_ks, "comma-separated retrieval depths");
    evalp->add_option("--method", evalp_method);
    evalp->add_option("--judge", cfg.judge, "oracle|replay|http");
    evalp->add_option("--judgments", cfg.judgments);
    evalp->add_option("--judge-host", cfg.judge_host);
    evalp->add_option("--judge-port", cfg.judge_port);
    evalp->add_option("--judge-path", cfg.judge_path);
    evalp->add_option("--descriptions", cfg.descriptions);
    evalp->add_option("--seed", evalp_seed);
    evalp->add_option("--out", evalp_out);
    evalp_thresholds.attach(evalp);

    // ---- eval-winrate
    auto* evalw = app.add_subcommand("eval-winrate", "pairwise win rates between methods");
    std::string evalw_methods = "entity,cs-canonical,ci-canonical", evalw_qids, evalw_sample;
    std::string evalw_out = "winrate_report.json";
    size_t evalw_cap = 100;
    uint64_t evalw_seed = 0;
    ThresholdFlags evalw_thresholds;
    evalw->add_option("--index", cfg.index_dir);
    evalw->add_option("--methods", evalw_methods);
    evalw->add_option("--qids", evalw_qids);
    evalw->add_option("--sample", evalw_sample,
                      "stratified sample instead of --qids, e.g. tail:20,torso:20,head:10");
    evalw->add_option("--cap", evalw_cap);
    evalw->add_option("--judge", cfg.judge);
    evalw->add_option("--judgments", cfg.judgments);
    evalw->add_option("--judge-host", cfg.judge_host);
    evalw->add_option("--judge-port", cfg.judge_port);
    evalw->add_option("--judge-path", cfg.judge_path);
    evalw->add_option("--descriptions", cfg.descriptions);
    evalw->add_option("--seed", evalw_seed);
    evalw->add_option("--out", evalw_out);
    evalw_thresholds.attach(evalw);

    // ---- track
    auto* track = app.add_subcommand("track", "learned/forgotten facts across an interval");
    std::string facts_path = "facts.tsv", answers_path = "answers.jsonl";
    std::string track_out = "acquisition_report.json";
    int64_t step_from = -1, step_to = -1;
    ThresholdFlags track_thresholds;
    track->add_option("--index", cfg.index_dir);
    track->add_option("--facts", facts_path);
    track->add_option("--answers", answers_path);
    track->add_option("--from", step_from, "interval start checkpoint step")->required();
    track->add_option("--to", step_to, "interval end checkpoint step")->required();
    track->add_option("--out", track_out);
    track_thresholds.attach(track);

    // ---- stats
    auto* stats = app.add_subcommand("stats", "corpus statistics report");
    stats->add_option("--documents", cfg.documents);
    stats->add_option("--scored-mentions", cfg.scored_mentions);
    stats->add_option("--chunks", cfg.chunks);
    stats->add_option("--entities", cfg.entities);

    // ---- serve
    auto* serve = app.add_subcommand("serve", "read-only HTTP service over an index");
    std::string host = "127.0.0.1";
    int port = 0;
    serve->add_option("--index", cfg.index_dir);
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    // ---- validate
    auto* validate = app.add_subcommand("validate", "check corpus invariants");
    validate->add_option("--documents", cfg.documents);
    validate->add_option("--scored-mentions", cfg.scored_mentions);
    validate->add_option("--mentions", cfg.mentions, "raw mentions for cluster membership");

    std::vector<const char*> argv;
    argv.push_back("entmark");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (const char* env_dir = std::getenv("ENTMARK_INDEX_DIR"); env_dir && cfg.index_dir == "index")
        cfg.index_dir = env_dir;

    if (extract->parsed()) {
        require_file(cfg.raw_documents);
        require_file(cfg.title_qid);
        auto s = pipeline::run_extract(cfg, append_mentions);
        json j{{"documents", s.documents}, {"links", s.links},      {"resolved", s.resolved},
               {"unresolved", s.unresolved}, {"warnings", s.warnings}};
        std::cout << j.dump() << "\n";
        return 0;
    }

    if (score->parsed()) {
        require_file(cfg.documents);
        require_file(cfg.mentions);
        auto s = pipeline::run_score(cfg);
        json j{{"documents", s.documents},
               {"mentions", s.mentions},
               {"clusters", s.clusters},
               {"warnings", s.warnings}};
        std::cout << j.dump() << "\n";
        return 0;
    }

    if (chunk->parsed()) {
        require_file(cfg.documents);
        require_file(cfg.scored_mentions);
        if (!seeds_csv.empty()) {
            cfg.epoch_seeds.clear();
            for (const auto& s : split_csv(seeds_csv)) cfg.epoch_seeds.push_back(std::stoull(s));
        }
        auto s = pipeline::run_chunk(cfg);
        json j{{"documents", s.documents},
               {"chunks", s.chunks},
               {"dropped_mentions", s.dropped_mentions},
               {"step_rows", s.step_rows}};
        std::cout << j.dump() << "\n";
        return 0;
    }

    if (index_cmd->parsed()) {
        require_file(cfg.chunks);
        pipeline::run_index(cfg);
        json j{{"index_dir", cfg.index_dir}};
        std::cout << j.dump() << "\n";
        return 0;
    }

    if (query->parsed()) {
        require_file(cfg.index_dir + "/manifest.json");
        auto idx = index::EntityIndex::load(cfg.index_dir);
        std::string buf;
        if (mode == "entity") {
            index::QuerySpec spec;
            spec.qid = qid;
            spec.thresholds = query_thresholds.resolve(idx.default_query_thresholds());
            spec.limit = limit;
            spec.offset = offset;
            auto result = idx.query_entity(spec);
            for (const auto& hit : result.hits) {
                buf += service::hit_to_json(hit).dump();
                buf += '\n';
            }
        } else {
            auto m = index::baseline_mode_from_string(mode);
            if (!m) throw UsageError("unknown mode: " + mode);
            auto entity = harness::entity_or_default(idx, qid);
            for (const auto& hit : idx.query_string(*m, entity, limit)) {
                buf += service::string_hit_to_json(hit).dump();
                buf += '\n';
            }
        }
        if (out_path.empty())
            std::cout << buf;
        else
            io::atomic_write(out_path, buf);
        return 0;
    }

    if (steps_cmd->parsed()) {
        require_file(cfg.index_dir + "/manifest.json");
        auto idx = index::EntityIndex::load(cfg.index_dir);
        auto t = steps_thresholds.resolve(idx.default_query_thresholds());
        for (const auto& [epoch, step] : idx.steps_for_entity(steps_qid, t)) {
            json j{{"epoch", epoch}, {"step", step}};
            std::cout << j.dump() << "\n";
        }
        return 0;
    }

    if (cooccur->parsed()) {
        require_file(cfg.index_dir + "/manifest.json");
        auto idx = index::EntityIndex::load(cfg.index_dir);
        auto t = cooccur_thresholds.resolve(idx.default_query_thresholds());
        json j{{"a", qid_a}, {"b", qid_b}, {"count", idx.cooccur_count(qid_a, qid_b, t)}};
        std::cout << j.dump() << "\n";
        return 0;
    }

    if (evalp->parsed()) {
        require_file(cfg.index_dir + "/manifest.json");
        auto idx = index::EntityIndex::load(cfg.index_dir);
        auto judge = make_judge(idx, cfg.judge, cfg.judgments, cfg.judge_host, cfg.judge_port,
                                cfg.judge_path);
        std::map<std::string, std::string> descriptions;
        if (std::filesystem::exists(cfg.descriptions))
            descriptions = io::read_descriptions(cfg.descriptions);
        std::vector<size_t> ks;
        for (const auto& k : split_csv(evalp_ks)) ks.push_back(std::stoull(k));
        auto t = evalp_thresholds.resolve(idx.default_query_thresholds());
        auto qids = resolve_eval_entities(idx, evalp_qids, evalp_sample, evalp_seed);
        auto report = harness::precision_report(idx, evalp_method, qids, ks, descriptions, *judge,
                                                t, evalp_seed, cfg.to_json());
        io::atomic_write(evalp_out, report.dump(2) + "\n");
        std::cout << report.at("mean").dump() << "\n";
        return 0;
    }

    if (evalw->parsed()) {
        require_file(cfg.index_dir + "/manifest.json");
        auto idx = index::EntityIndex::load(cfg.index_dir);
        auto judge = make_judge(idx, cfg.judge, cfg.judgments, cfg.judge_host, cfg.judge_port,
                                cfg.judge_path);
        std::map<std::string, std::string> descriptions;
        if (std::filesystem::exists(cfg.descriptions))
            descriptions = io::read_descriptions(cfg.descriptions);
        auto t = evalw_thresholds.resolve(idx.default_query_thresholds());
        auto qids = resolve_eval_entities(idx, evalw_qids, evalw_sample, evalw_seed);
        auto report = harness::winrate_report(idx, split_csv(evalw_methods), qids, descriptions,
                                              *judge, t, evalw_cap, evalw_seed, cfg.to_json());
        io::atomic_write(evalw_out, report.dump(2) + "\n");
        std::cout << report.at("pairs").dump() << "\n";
        return 0;
    }

    if (track->parsed()) {
        require_file(cfg.index_dir + "/manifest.json");
        require_file(facts_path);
        require_file(answers_path);
        auto idx = index::EntityIndex::load(cfg.index_dir);
        auto facts = facts::facts_from_rows(io::read_facts(facts_path));
        auto checkpoints = facts::checkpoints_from_rows(io::read_answers(answers_path));
        const facts::CheckpointAnswers* at_start = nullptr;
        const facts::CheckpointAnswers* at_end = nullptr;
        for (const auto& cp : checkpoints) {
            if (cp.step == step_from) at_start = &cp;
            if (cp.step == step_to) at_end = &cp;
        }
        if (!at_start || !at_end)
            throw UsageError("answer log has no checkpoint at the requested steps");
        if (idx.steps().empty())
            throw UsageError("index carries no step assignments; rebuild with --steps");
        auto t = track_thresholds.resolve(idx.default_query_thresholds());
        auto stats_result =
            facts::interval_stats(facts, *at_start, *at_end, idx, idx.steps(), t);
        json j;
        j["config"] = cfg.to_json();
        j["interval"] = {{"from", stats_result.step_from}, {"to", stats_result.step_to}};
        j["facts_seen"] = stats_result.facts_seen;
        auto bin_json = [](const facts::BinStats& b) {
            return json{{"bin", b.bin},
                        {"facts", b.facts},
                        {"learned", b.learned},
                        {"forgotten", b.forgotten},
                        {"learned_pct", b.learned_pct},
                        {"forgotten_pct", b.forgotten_pct},
                        {"net_pct", b.net_pct}};
        };
        j["overall"] = bin_json(stats_result.overall);
        json bins = json::array();
        for (const auto& b : stats_result.bins) bins.push_back(bin_json(b));
        j["bins"] = std::move(bins);
        io::atomic_write(track_out, j.dump(2) + "\n");
        std::cout << j.at("overall").dump() << "\n";
        return 0;
    }

    if (stats->parsed()) {
        std::cout << pipeline::corpus_stats(cfg).dump(2) << "\n";
        return 0;
    }

    if (serve->parsed()) {
        require_file(cfg.index_dir + "/manifest.json");
        if (port == 0) {
            if (const char* env_port = std::getenv("ENTMARK_PORT")) port = std::atoi(env_port);
        }
        if (port <= 0) throw UsageError("--port (or ENTMARK_PORT) is required");
        auto idx = index::EntityIndex::load(cfg.index_dir);
        return service::serve(idx, host, port);
    }

    if (validate->parsed()) {
        require_file(cfg.documents);
        auto documents = io::read_documents(cfg.documents);
        std::map<std::string, std::vector<Mention>> mentions_by_doc;
        if (std::filesystem::exists(cfg.scored_mentions))
            mentions_by_doc = io::group_mentions(io::read_scored_mentions(cfg.scored_mentions));
        std::vector<CorefCluster> clusters;
        if (std::filesystem::exists(cfg.mentions)) {
            auto raw = io::read_raw_mentions(cfg.mentions);
            clusters = scoring::clusters_from_raw(documents, raw);
            // Rebuild distributions from the scored mentions' cc values.
            std::map<std::pair<std::string, std::string>, std::map<std::string, double>> dists;
            for (const auto& [doc_id, mentions] : mentions_by_doc) {
                for (const auto& m : mentions) {
                    if (!m.cluster_id) continue;
                    for (const auto& c : m.candidates)
                        if (c.cc) dists[{doc_id, *m.cluster_id}][c.qid] = *c.cc;
                }
            }
            for (auto& cl : clusters) {
                auto it = dists.find({cl.doc_id, cl.cluster_id});
                if (it != dists.end()) cl.entity_distribution = it->second;
            }
        }
        auto report = validate_corpus(documents, mentions_by_doc, clusters);
        for (const auto& v : report.violations) {
            json j{{"kind", v.kind}, {"where", v.where}, {"detail", v.detail}};
            std::cout << j.dump() << "\n";
        }
        json summary{{"violations", report.violations.size()}, {"ok", report.ok()}};
        std::cout << summary.dump() << "\n";
        return report.ok() ? 0 : 1;
    }

    return 2;
}

} // namespace

int run(const std::vector<std::string>& args) {
    try {
        return dispatch(args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace entmark::cli
