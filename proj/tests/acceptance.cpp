// Acceptance suite. Each criterion prints one [PASS]/[FAIL] line; the exit
// code is the number of failures. Run with no arguments for all criteria or
// with a list of criterion numbers.

#include "entmark/chunker.hpp"
#include "entmark/cli.hpp"
#include "entmark/eval.hpp"
#include "entmark/facts.hpp"
#include "entmark/harness.hpp"
#include "entmark/index.hpp"
#include "entmark/io.hpp"
#include "entmark/pipeline.hpp"
#include "entmark/scoring.hpp"
#include "entmark/service.hpp"
#include "entmark/utf8.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace entmark;
using nlohmann::json;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
    void expect(bool cond, const std::string& why) {
        if (!cond) fail(why);
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::filesystem::path work_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("entmark_acceptance_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------------------
// C1: scoring exactness on the Bills/hospital reconstruction fixture.

Check criterion_1() {
    Check check;
    auto start = std::chrono::steady_clock::now();

    std::string text =
        "Josh Allen joined the Buffalo Bills in 2018. The team drafted him seventh overall. "
        "Buffalo fans gathered at John R. Oishei Children's Hospital in Buffalo to celebrate.";
    std::vector<Document> docs = {{"d1", text, "Josh Allen"}};

    auto span_of = [&text](const std::string& needle, size_t from = 0) {
        auto byte = text.find(needle, from);
        return std::pair<int64_t, int64_t>(
            static_cast<int64_t>(byte), static_cast<int64_t>(byte + needle.size()));
    };
    auto [bills_s, bills_e] = span_of("Buffalo Bills");
    auto [team_s, team_e] = span_of("The team");
    auto [buffalo_s, buffalo_e] = span_of("Buffalo fans");
    buffalo_e = buffalo_s + 7;  // just "Buffalo"

    std::vector<RawMention> raws = {
        {"d1", bills_s, bills_e, RawMention::Kind::Hyperlink, "Q221626", 1.0f, std::nullopt},
        {"d1", buffalo_s, buffalo_e, RawMention::Kind::EntityLinking, "Q40435", 0.98f, std::nullopt},
        {"d1", bills_s, bills_e, RawMention::Kind::Coref, std::nullopt, std::nullopt, "c1"},
        {"d1", team_s, team_e, RawMention::Kind::Coref, std::nullopt, std::nullopt, "c1"},
    };
    auto clusters = scoring::clusters_from_raw(docs, raws);
    auto result = scoring::score_corpus(docs, raws, clusters);

    // The Bills cluster supports exactly one entity, so CC = 1.0.
    check.expect(result.clusters.size() == 1, "expected one cluster");
    if (check.ok) {
        const auto& dist = result.clusters[0].entity_distribution;
        check.expect(dist.size() == 1 && dist.count("Q221626"), "cluster must support only Q221626");
        if (check.ok)
            check.expect(std::fabs(dist.at("Q221626") - 1.0) <= 1e-6,
                         "CC(cluster, Q221626) != 1.0");
    }

    const Mention* team = nullptr;
    const Mention* buffalo = nullptr;
    for (const auto& m : result.mentions_by_doc.at("d1")) {
        if (m.span.start == team_s) team = &m;
        if (m.span.start == buffalo_s) buffalo = &m;
    }
    check.expect(team != nullptr, "no mention for \"The team\"");
    if (team) {
        const auto* cand = team->candidate_for("Q221626");
        check.expect(cand && cand->cc, "\"The team\" lacks a CC-scored Q221626 candidate");
        if (cand && cand->cc)
            check.expect(std::fabs(*cand->cc - 1.0) <= 1e-6, "CC(\"the team\", Q221626) != 1.0");
    }
    check.expect(buffalo != nullptr, "no mention for \"Buffalo\"");
    if (buffalo) {
        const auto* cand = buffalo->candidate_for("Q40435");
        check.expect(cand && cand->el && *cand->el == 0.98f, "EL confidence 0.98 not stored");
    }

    double elapsed = seconds_since(start);
    check.expect(elapsed < 1.0, "runtime " + std::to_string(elapsed) + "s exceeds 1s");
    return check;
}

// ---------------------------------------------------------------------------
// C2: C and CC match a brute-force implementation on 1,000 random clusters.

Check criterion_2() {
    Check check;
    auto start = std::chrono::steady_clock::now();
    synth::Rng rng(2024);
    const char alphabet[] = "abcdab ";

    for (int iter = 0; iter < 1000 && check.ok; ++iter) {
        CorefCluster cluster;
        int n_members = 1 + static_cast<int>(rng.below(5));
        int64_t pos = 0;
        for (int i = 0; i < n_members; ++i) {
            std::string surface;
            for (int64_t n = rng.below(10); n >= 0; --n)
                surface += alphabet[rng.below(sizeof(alphabet) - 1)];
            int64_t len = static_cast<int64_t>(utf8::cp_count(surface));
            cluster.member_spans.push_back({pos, pos + std::max<int64_t>(len, 1), surface});
            pos += std::max<int64_t>(len, 1) + 2;
        }

        scoring::ClusterContext ctx;
        ctx.cluster = &cluster;
        oracles::OracleCluster ocl;
        ocl.members = cluster.member_spans;

        int n_entities = 1 + static_cast<int>(rng.below(3));
        for (int i = 0; i < n_members; ++i) {
            if (rng.chance(0.45)) continue;
            const auto& span = cluster.member_spans[static_cast<size_t>(i)];
            std::string qid = synth::qid_of(rng.below(n_entities));
            if (rng.chance(0.5)) {
                ctx.hyperlink_members.push_back({span, qid, 1.0f});
                ocl.h_members.push_back({span.surface, qid, 1.0, span});
            } else {
                float score = static_cast<float>(rng.unit());
                ctx.el_members.push_back({span, qid, score});
                ocl.el_members.push_back({span.surface, qid, static_cast<double>(score), span});
            }
        }

        auto got = scoring::cluster_distribution(ctx);
        auto want = oracles::cc_oracle(ocl);
        check.expect(got.size() == want.size(), "CC support sets differ at iteration " +
                                                    std::to_string(iter));
        for (const auto& [qid, cc] : want) {
            if (!got.count(qid) || std::fabs(got.at(qid) - cc) > 1e-6) {
                check.fail("CC mismatch at iteration " + std::to_string(iter) + " entity " + qid);
                break;
            }
        }
        for (const auto& member : cluster.member_spans) {
            for (int e = 0; e < n_entities; ++e) {
                auto qid = synth::qid_of(e);
                double got_c = scoring::coref_score(member, ctx, qid).value_or(0.0);
                double want_c = oracles::c_oracle(member.surface, ocl, qid);
                if (std::fabs(got_c - want_c) > 1e-6) {
                    check.fail("C mismatch at iteration " + std::to_string(iter));
                    break;
                }
            }
        }
    }

    double elapsed = seconds_since(start);
    check.expect(elapsed < 30.0, "runtime " + std::to_string(elapsed) + "s exceeds 30s");
    return check;
}

// ---------------------------------------------------------------------------
// C3: chunker reconstruction over 500 random documents at L in {16,128,512}.

Check criterion_3() {
    Check check;
    auto start = std::chrono::steady_clock::now();
    synth::Rng rng(33);
    chunking::WhitespaceTokenizer tok;

    for (int d = 0; d < 500 && check.ok; ++d) {
        auto rd = synth::random_document(rng, "doc" + std::to_string(d), 5000);
        auto enc = tok.encode(rd.doc.text);
        auto ranges = chunking::mention_token_ranges(enc.offsets, rd.mentions);

        for (int32_t L : {16, 128, 512}) {
            auto plan = chunking::plan_chunks(rd.doc.doc_id, enc.offsets, rd.mentions, L);
            auto chunks =
                chunking::materialize_chunks(plan, rd.doc, enc, rd.mentions, tok.pad_token_id(), 0);

            // Reconstruction: non-pad tokens equal the source stream.
            std::vector<int64_t> rebuilt;
            for (const auto& c : chunks) {
                check.expect(c.doc_id == rd.doc.doc_id, "chunk crosses documents");
                for (int32_t i = 0; i < c.content_len; ++i) rebuilt.push_back(c.token_ids[i]);
                for (size_t i = static_cast<size_t>(c.content_len); i < c.token_ids.size(); ++i)
                    check.expect(c.token_ids[i] == tok.pad_token_id(), "non-pad token in padding");
            }
            if (rebuilt != enc.ids) {
                check.fail("token reconstruction failed for doc " + std::to_string(d) + " L=" +
                           std::to_string(L));
                break;
            }

            // Zero mentions split; only oversized mentions may be dropped,
            // and each of those must appear in the drop report.
            std::set<size_t> dropped(plan.dropped_mentions.begin(), plan.dropped_mentions.end());
            size_t emitted = 0;
            for (const auto& c : chunks) {
                for (const auto& m : c.mentions) {
                    ++emitted;
                    check.expect(m.tok_start >= 0 && m.tok_end <= c.content_len,
                                 "mention outside the content range");
                }
            }
            check.expect(emitted + dropped.size() == rd.mentions.size(),
                         "mention lost without a drop record");
            for (size_t i = 0; i < rd.mentions.size(); ++i) {
                bool oversized = ranges[i].end - ranges[i].start > L;
                if (oversized)
                    check.expect(dropped.count(i) == 1, "oversized mention missing from drop report");
                else
                    check.expect(dropped.count(i) == 0, "mention within L was dropped");
            }
            if (!check.ok) break;
        }
    }

    double elapsed = seconds_since(start);
    check.expect(elapsed < 30.0, "runtime " + std::to_string(elapsed) + "s exceeds 30s");
    return check;
}

// ---------------------------------------------------------------------------
// C4: retrieval soundness/completeness vs a linear scan on 1,000 chunks.

Check criterion_4() {
    Check check;
    auto start = std::chrono::steady_clock::now();

    auto chunks = synth::random_chunks(44, 1000, 120);
    auto idx = index::EntityIndex::build(chunks);
    auto thresholds = index::default_thresholds();

    synth::Rng rng(45);
    for (int i = 0; i < 100 && check.ok; ++i) {
        auto qid = synth::qid_of(rng.below(130));  // some qids unused on purpose
        auto want = oracles::scan_matching(chunks, qid, thresholds);
        if (idx.matching_chunks(qid, thresholds) != want) {
            check.fail("matching set differs from linear scan for " + qid);
            break;
        }
        index::QuerySpec spec;
        spec.qid = qid;
        spec.thresholds = thresholds;
        spec.limit = chunks.size();
        auto result = idx.query_entity(spec);
        auto ranked = oracles::scan_ranked(chunks, qid, thresholds, idx.weights());
        check.expect(result.total == ranked.size(), "total differs for " + qid);
        check.expect(result.hits.size() == ranked.size(), "hit count differs for " + qid);
        for (size_t j = 0; check.ok && j < ranked.size(); ++j) {
            if (result.hits[j].chunk_id != ranked[j].first ||
                std::fabs(result.hits[j].rank_score - ranked[j].second) > 1e-12)
                check.fail("ranking order differs from brute force for " + qid);
        }
    }

    double elapsed = seconds_since(start);
    check.expect(elapsed < 30.0, "runtime " + std::to_string(elapsed) + "s exceeds 30s");
    return check;
}

// ---------------------------------------------------------------------------
// C5: string baseline fidelity vs naive scans; CS/CI differ exactly on case.

Check criterion_5() {
    Check check;
    synth::Rng rng(55);

    // 100 random name/corpus pairs, including the documented table strings.
    std::vector<std::string> names = {"buffalo, new york", "The Queen City"};
    while (names.size() < 100)
        names.push_back("Name " + std::to_string(rng.below(1000)) + " " + synth::word(rng));

    for (size_t n = 0; n < names.size() && check.ok; ++n) {
        const auto& name = names[n];
        std::vector<Chunk> chunks;
        for (uint64_t i = 0; i < 40; ++i) {
            Chunk c;
            c.chunk_id = i;
            c.doc_id = "d";
            c.content_len = 1;
            c.token_ids = {1};
            c.text = synth::random_text(rng, 6);
            if (rng.chance(0.35)) {
                std::string planted = name;
                if (rng.chance(0.5))
                    planted = utf8::ascii_fold(planted);
                else if (rng.chance(0.5))
                    for (auto& ch : planted)
                        if (ch >= 'a' && ch <= 'z' && rng.chance(0.3)) ch = static_cast<char>(ch - 32);
                c.text += " " + planted + " " + synth::word(rng);
            }
            chunks.push_back(std::move(c));
        }
        auto idx = index::EntityIndex::build(chunks);
        EntityRef entity{"Q1", name, {}};

        auto hits = idx.query_string(index::BaselineMode::CiCanonical, entity, chunks.size());
        std::vector<uint64_t> got;
        for (const auto& h : hits) got.push_back(h.chunk_id);
        std::sort(got.begin(), got.end());
        if (got != oracles::scan_substring(chunks, name, true)) {
            check.fail("CI-SS canonical differs from the naive scan for \"" + name + "\"");
            break;
        }

        auto cs_hits = idx.query_string(index::BaselineMode::CsCanonical, entity, chunks.size());
        std::vector<uint64_t> cs_got;
        for (const auto& h : cs_hits) cs_got.push_back(h.chunk_id);
        std::sort(cs_got.begin(), cs_got.end());
        if (cs_got != oracles::scan_substring(chunks, name, false)) {
            check.fail("CS-SS canonical differs from the naive scan for \"" + name + "\"");
            break;
        }
    }

    // CS-SS and CI-SS must differ exactly on the case-mismatched chunks.
    {
        std::vector<Chunk> chunks;
        auto add = [&chunks](uint64_t id, std::string text) {
            Chunk c;
            c.chunk_id = id;
            c.doc_id = "d";
            c.content_len = 1;
            c.token_ids = {1};
            c.text = std::move(text);
            chunks.push_back(std::move(c));
        };
        add(0, "Buffalo, New York sits on Lake Erie");      // exact case
        add(1, "they toured buffalo, new york in May");     // folded case
        add(2, "BUFFALO, NEW YORK in caps");                // folded case
        add(3, "nothing related at all");
        auto idx = index::EntityIndex::build(chunks);
        EntityRef entity{"Q40435", "Buffalo, New York", {"The Queen City"}};

        auto ids_of = [](const std::vector<index::StringHit>& hits) {
            std::set<uint64_t> out;
            for (const auto& h : hits) out.insert(h.chunk_id);
            return out;
        };
        auto cs = ids_of(idx.query_string(index::BaselineMode::CsCanonical, entity, 10));
        auto ci = ids_of(idx.query_string(index::BaselineMode::CiCanonical, entity, 10));
        check.expect(cs == std::set<uint64_t>{0}, "CS-SS must match only the exact-case chunk");
        check.expect(ci == std::set<uint64_t>{0, 1, 2}, "CI-SS must also match folded chunks");
    }
    return check;
}

// ---------------------------------------------------------------------------
// C6: oracle-judge precision: entity retrieval is exact; alias expansion
// degrades the string baseline.

Check criterion_6() {
    Check check;
    auto start = std::chrono::steady_clock::now();
    synth::Rng rng(66);

    // 1,500 chunks; Q7 truly appears in ~1,200 of them.
    std::vector<Chunk> chunks;
    size_t true_count = 0;
    for (uint64_t i = 0; i < 1500; ++i) {
        Chunk c;
        c.chunk_id = i;
        c.doc_id = "d" + std::to_string(i);
        c.content_len = 8;
        for (int t = 0; t < 8; ++t) c.token_ids.push_back(rng.below(100));
        std::vector<std::pair<int64_t, int64_t>> spans;
        c.text = synth::random_text(rng, 8, &spans);
        bool truly_mentions = i < 1200;
        if (truly_mentions) ++true_count;
        ChunkMention m;
        m.tok_start = 0;
        m.tok_end = 1;
        m.char_start = spans[0].first;
        m.char_end = spans[0].second;
        CandidateScore cand;
        cand.qid = truly_mentions ? "Q7" : "Q8";
        cand.el = 0.6f + 0.4f * static_cast<float>(rng.unit());
        m.candidates.push_back(cand);
        c.mentions.push_back(m);
        chunks.push_back(std::move(c));
    }
    auto idx = index::EntityIndex::build(chunks);

    eval::OracleJudge oracle([&idx](const std::string& qid, uint64_t chunk_id) {
        const Chunk* c = idx.chunk(chunk_id);
        if (!c) return false;
        for (const auto& m : c->mentions)
            if (m.candidate_for(qid)) return true;
        return false;
    });

    EntityRef q7{"Q7", "Entity Seven", {}};
    auto retrieved = harness::retrieve_entity_chunks(idx, "Q7", index::default_thresholds(), 1500);
    check.expect(retrieved.size() == true_count, "entity retrieval size unexpected");
    for (size_t k : {size_t{1}, size_t{5}, size_t{10}, size_t{100}, size_t{1000}}) {
        auto res = eval::precision_at_k(retrieved, k, oracle, q7, "an entity", 7);
        if (!res.precision || *res.precision != 1.0) {
            check.fail("entity retrieval precision@" + std::to_string(k) + " != 1.0");
            break;
        }
        if (k >= 1000) check.expect(res.sampled, "sample-100 rule not applied at k=1000");
    }

    // Alias ambiguity: "Mercury" names both the planet and the element.
    {
        std::vector<Chunk> ambiguous;
        for (uint64_t i = 0; i < 60; ++i) {
            Chunk c;
            c.chunk_id = i;
            c.doc_id = "m" + std::to_string(i);
            c.content_len = 4;
            c.token_ids = {1, 2, 3, 4};
            bool planet = i < 20;
            c.text = planet ? "the orbit of Planet Mercury is small"
                            : "Mercury metal stays liquid at room temperature";
            ChunkMention m;
            m.tok_start = 0;
            m.tok_end = 1;
            m.char_end = 3;
            CandidateScore cand;
            cand.qid = planet ? "Q308" : "Q925";
            cand.h = 1.0f;
            m.candidates.push_back(cand);
            c.mentions.push_back(m);
            ambiguous.push_back(std::move(c));
        }
        auto amb_idx = index::EntityIndex::build(ambiguous);
        eval::OracleJudge amb_oracle([&amb_idx](const std::string& qid, uint64_t chunk_id) {
            const Chunk* c = amb_idx.chunk(chunk_id);
            if (!c) return false;
            for (const auto& m : c->mentions)
                if (m.candidate_for(qid)) return true;
            return false;
        });
        EntityRef planet{"Q308", "Planet Mercury", {"Mercury"}};

        auto canonical =
            harness::retrieve_string_chunks(amb_idx, index::BaselineMode::CsCanonical, planet, 60);
        auto expanded =
            harness::retrieve_string_chunks(amb_idx, index::BaselineMode::CsExpanded, planet, 60);
        auto p_canonical = eval::precision_at_k(canonical, 60, amb_oracle, planet, "the planet", 3);
        auto p_expanded = eval::precision_at_k(expanded, 60, amb_oracle, planet, "the planet", 3);
        check.expect(p_canonical.precision && p_expanded.precision, "ambiguity precision missing");
        if (p_canonical.precision && p_expanded.precision) {
            check.expect(*p_expanded.precision < *p_canonical.precision,
                         "alias expansion must strictly lower precision on the ambiguous fixture");
        }
    }

    double elapsed = seconds_since(start);
    check.expect(elapsed < 60.0, "runtime " + std::to_string(elapsed) + "s exceeds 60s");
    return check;
}

// ---------------------------------------------------------------------------
// C7: pairwise win rates on a 4-method, 50-entity scripted fixture.

Check criterion_7() {
    Check check;
    synth::Rng rng(77);

    const size_t n_methods = 4, n_entities = 50;
    std::vector<EntityRef> entities;
    for (size_t e = 0; e < n_entities; ++e)
        entities.push_back({synth::qid_of(static_cast<int64_t>(e)), "entity", {}});

    // Scripted yes-counts per (method, entity); retrieval sizes stay under
    // the cap so judged counts are exact.
    std::vector<std::map<std::string, size_t>> yes_table(n_methods);
    std::vector<std::map<std::string, size_t>> total_table(n_methods);
    for (size_t m = 0; m < n_methods; ++m) {
        for (const auto& e : entities) {
            size_t total = 1 + static_cast<size_t>(rng.below(80));
            size_t yes = static_cast<size_t>(rng.below(static_cast<int64_t>(total) + 1));
            total_table[m][e.qid] = total;
            yes_table[m][e.qid] = yes;
        }
    }

    struct ScriptJudge : eval::Judge {
        const std::vector<std::map<std::string, size_t>>* yes_table;
        std::vector<bool> judge(const eval::JudgeRequest& req) override {
            size_t method = req.chunk_id / 100000;
            size_t pos = req.chunk_id % 100000;
            bool yes = pos < yes_table->at(method).at(req.qid);
            return std::vector<bool>(req.windows.size(), yes);
        }
    };
    ScriptJudge judge;
    judge.yes_table = &yes_table;

    std::vector<eval::Method> methods;
    for (size_t m = 0; m < n_methods; ++m) {
        methods.push_back({"M" + std::to_string(m), [m, &total_table](const EntityRef& e) {
                               std::vector<eval::RetrievedChunk> out;
                               size_t total = total_table[m].at(e.qid);
                               for (size_t i = 0; i < total; ++i)
                                   out.push_back({m * 100000 + i, {"w"}});
                               return out;
                           }});
    }

    auto report = eval::pairwise_winrates(methods, entities, {}, judge, 100, 7);

    // Brute-force enumeration over the scripted tables.
    check.expect(report.pairs.size() == 6, "expected 6 method pairs");
    for (const auto& pair : report.pairs) {
        size_t a = static_cast<size_t>(pair.method_a[1] - '0');
        size_t b = static_cast<size_t>(pair.method_b[1] - '0');
        size_t wins_a = 0, wins_b = 0, ties = 0;
        for (const auto& e : entities) {
            size_t ya = yes_table[a].at(e.qid), yb = yes_table[b].at(e.qid);
            if (ya > yb)
                ++wins_a;
            else if (yb > ya)
                ++wins_b;
            else
                ++ties;
        }
        check.expect(pair.wins_a == wins_a && pair.wins_b == wins_b && pair.ties == ties,
                     "win/loss/tie counts differ from brute force for " + pair.method_a + " vs " +
                         pair.method_b);
        double sum = pair.win_pct + pair.loss_pct + pair.tie_pct;
        check.expect(std::fabs(sum - 100.0) < 1e-9, "win+loss+tie != 100%");
    }
    for (size_t m = 0; m < n_methods; ++m)
        for (const auto& e : entities)
            check.expect(report.yes_counts.at("M" + std::to_string(m)).at(e.qid) ==
                             yes_table[m].at(e.qid),
                         "scripted yes count mismatch");
    return check;
}

// ---------------------------------------------------------------------------
// C8: step/co-occurrence bookkeeping and fact statistics vs brute force.

Check criterion_8() {
    Check check;
    auto start = std::chrono::steady_clock::now();

    auto chunks = synth::random_chunks(88, 1000, 40);
    auto idx = index::EntityIndex::build(chunks);
    auto thresholds = index::default_thresholds();

    std::vector<uint64_t> ids;
    for (const auto& c : chunks) ids.push_back(c.chunk_id);
    auto assignments = chunking::assign_steps(ids, 32, 2, {881, 882});
    chunking::StepsMap steps(assignments);
    idx.set_steps(steps);

    // steps_for_entity vs linear scan.
    synth::Rng rng(89);
    for (int i = 0; i < 30 && check.ok; ++i) {
        auto qid = synth::qid_of(rng.below(40));
        auto matching = oracles::scan_matching(chunks, qid, thresholds);
        std::set<std::pair<int32_t, int32_t>> want;
        for (const auto& a : assignments)
            if (std::binary_search(matching.begin(), matching.end(), a.chunk_id))
                want.insert({a.epoch, a.step});
        auto got = idx.steps_for_entity(qid, thresholds);
        if (std::vector<std::pair<int32_t, int32_t>>(want.begin(), want.end()) != got)
            check.fail("steps_for_entity differs from linear scan for " + qid);
    }

    // cooccur_count vs linear scan.
    for (int i = 0; i < 30 && check.ok; ++i) {
        auto a = synth::qid_of(rng.below(40));
        auto b = synth::qid_of(rng.below(40));
        auto ma = oracles::scan_matching(chunks, a, thresholds);
        auto mb = oracles::scan_matching(chunks, b, thresholds);
        std::vector<uint64_t> both;
        std::set_intersection(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(both));
        if (idx.cooccur_count(a, b, thresholds) != both.size())
            check.fail("cooccur_count differs from linear scan for " + a + "," + b);
        if (idx.cooccur_count(a, b, thresholds) != idx.cooccur_count(b, a, thresholds))
            check.fail("cooccur_count is not symmetric");
    }

    // Interval partition over a single epoch: three intervals covering the
    // step axis sum to the epoch total.
    {
        auto single = chunking::assign_steps(ids, 32, 1, {883});
        chunking::StepsMap smap(single);
        int64_t last = smap.steps_per_epoch() - 1;
        int64_t a = last / 3, b = 2 * last / 3;
        for (int i = 0; i < 20 && check.ok; ++i) {
            auto qa = synth::qid_of(rng.below(40));
            auto qb = synth::qid_of(rng.below(40));
            uint64_t total = facts::interval_frequency(idx, smap, qa, qb, thresholds, -1, last);
            uint64_t sum = facts::interval_frequency(idx, smap, qa, qb, thresholds, -1, a) +
                           facts::interval_frequency(idx, smap, qa, qb, thresholds, a, b) +
                           facts::interval_frequency(idx, smap, qa, qb, thresholds, b, last);
            if (sum != total) check.fail("interval frequencies do not partition the epoch");
            if (total != idx.cooccur_count(qa, qb, thresholds))
                check.fail("epoch total differs from cooccur_count");
        }
    }

    // 20-fact fixture: learned/forgotten/net vs brute force.
    {
        auto single = chunking::assign_steps(ids, 32, 1, {884});
        chunking::StepsMap smap(single);
        int64_t from = 5, to = 20;

        std::vector<facts::Fact> fact_list;
        for (int i = 0; i < 20; ++i) {
            auto subj = synth::qid_of(rng.below(40));
            auto ans = synth::qid_of(rng.below(40));
            fact_list.push_back({subj, ans, {"q" + std::to_string(i)}});
        }
        facts::CheckpointAnswers at_from{from, {}};
        facts::CheckpointAnswers at_to{to, {}};
        for (int i = 0; i < 20; ++i) {
            if (rng.chance(0.4)) at_from.correct.insert("q" + std::to_string(i));
            if (rng.chance(0.5)) at_to.correct.insert("q" + std::to_string(i));
        }

        auto stats = facts::interval_stats(fact_list, at_from, at_to, idx, smap, thresholds);

        size_t seen = 0, learned = 0, forgotten = 0;
        for (const auto& f : fact_list) {
            uint64_t freq =
                facts::interval_frequency(idx, smap, f.subject_qid, f.answer_qid, thresholds, from, to);
            if (freq == 0) continue;
            ++seen;
            bool before = at_from.correct.count(f.question_ids[0]) > 0;
            bool after = at_to.correct.count(f.question_ids[0]) > 0;
            if (!before && after) ++learned;
            if (before && !after) ++forgotten;
        }
        check.expect(stats.facts_seen == seen, "facts_seen differs from brute force");
        check.expect(stats.overall.learned == learned, "learned count differs from brute force");
        check.expect(stats.overall.forgotten == forgotten, "forgotten count differs from brute force");
        check.expect(std::fabs(stats.overall.net_pct -
                               (stats.overall.learned_pct - stats.overall.forgotten_pct)) < 1e-12,
                     "net% != learned% - forgotten%");
        check.expect(fact_list.size() == 20, "fixture must hold 20 facts");
    }

    double elapsed = seconds_since(start);
    check.expect(elapsed < 30.0, "runtime " + std::to_string(elapsed) + "s exceeds 30s");
    return check;
}

// ---------------------------------------------------------------------------
// C9: two pipeline runs from identical inputs produce byte-identical outputs.

namespace c9 {

void write_inputs(const std::filesystem::path& dir) {
    synth::Rng rng(99);
    std::vector<io::RawDocument> raw_docs;
    std::map<std::string, std::string> titles;
    std::map<std::string, EntityRef> entities;
    for (int e = 0; e < 30; ++e) {
        std::string name = "Entity " + std::to_string(e);
        titles[name] = synth::qid_of(e);
        entities[synth::qid_of(e)] = {synth::qid_of(e), name, {"alias " + std::to_string(e)}};
    }
    for (int d = 0; d < 50; ++d) {
        std::string markup;
        int pieces = 20 + static_cast<int>(rng.below(30));
        for (int p = 0; p < pieces; ++p) {
            if (rng.chance(0.2))
                markup += "[[Entity " + std::to_string(rng.below(30)) + "]] ";
            else
                markup += synth::word(rng) + " ";
        }
        raw_docs.push_back({"doc" + std::to_string(d), "title" + std::to_string(d), markup});
    }
    io::write_raw_documents(dir / "documents_raw.jsonl", raw_docs);
    io::write_title_qid(dir / "title_qid.tsv", titles);
    io::write_entities(dir / "entities.tsv", entities);
}

pipeline::PipelineConfig config_for(const std::filesystem::path& dir) {
    pipeline::PipelineConfig cfg;
    cfg.raw_documents = (dir / "documents_raw.jsonl").string();
    cfg.title_qid = (dir / "title_qid.tsv").string();
    cfg.entities = (dir / "entities.tsv").string();
    cfg.documents = (dir / "documents.jsonl").string();
    cfg.mentions = (dir / "mentions.jsonl").string();
    cfg.unresolved = (dir / "unresolved.jsonl").string();
    cfg.scored_mentions = (dir / "scored_mentions.jsonl").string();
    cfg.chunks = (dir / "chunks.jsonl").string();
    cfg.drop_report = (dir / "drop_report.jsonl").string();
    cfg.steps = (dir / "steps.tsv").string();
    cfg.index_dir = (dir / "index").string();
    cfg.seq_len = 32;
    cfg.batch_size = 4;
    cfg.epochs = 2;
    cfg.epoch_seeds = {5, 6};
    return cfg;
}

std::map<std::string, std::string> run_once(const pipeline::PipelineConfig& cfg,
                                            const std::filesystem::path& dir) {
    pipeline::run_extract(cfg);
    pipeline::run_score(cfg);
    pipeline::run_chunk(cfg);
    pipeline::run_index(cfg);

    auto idx = pipeline::load_index(cfg);
    eval::OracleJudge oracle([&idx](const std::string& qid, uint64_t chunk_id) {
        const Chunk* c = idx.chunk(chunk_id);
        if (!c) return false;
        for (const auto& m : c->mentions)
            if (m.candidate_for(qid)) return true;
        return false;
    });
    std::vector<std::string> qids = {"Q1", "Q2", "Q3", "Q4", "Q5"};
    auto report = harness::precision_report(idx, "entity", qids, {1, 5, 10}, {}, oracle,
                                            idx.default_query_thresholds(), 9, cfg.to_json());
    io::atomic_write(dir / "precision_report.json", report.dump(2) + "\n");

    std::string query_out;
    for (const auto& qid : qids) {
        index::QuerySpec spec;
        spec.qid = qid;
        spec.thresholds = idx.default_query_thresholds();
        spec.limit = 50;
        for (const auto& hit : idx.query_entity(spec).hits) {
            query_out += service::hit_to_json(hit).dump();
            query_out += '\n';
        }
    }
    io::atomic_write(dir / "query_output.jsonl", query_out);

    std::map<std::string, std::string> outputs;
    for (const char* name :
         {"index/manifest.json", "index/postings.bin", "index/chunks.bin", "index/entities.tsv",
          "index/steps.tsv", "documents.jsonl", "mentions.jsonl", "scored_mentions.jsonl",
          "chunks.jsonl", "steps.tsv", "precision_report.json", "query_output.jsonl"})
        outputs[name] = slurp(dir / name);
    return outputs;
}

} // namespace c9

Check criterion_9() {
    Check check;
    auto dir = work_dir("c9");
    c9::write_inputs(dir);
    auto cfg = c9::config_for(dir);

    auto first = c9::run_once(cfg, dir);
    // Remove every output; keep the inputs.
    std::filesystem::remove_all(dir / "index");
    for (const char* name : {"documents.jsonl", "mentions.jsonl", "scored_mentions.jsonl",
                             "chunks.jsonl", "steps.tsv", "drop_report.jsonl", "unresolved.jsonl",
                             "precision_report.json", "query_output.jsonl"})
        std::filesystem::remove(dir / name);
    auto second = c9::run_once(cfg, dir);

    check.expect(first.size() == second.size(), "output sets differ");
    for (const auto& [name, bytes] : first) {
        if (!second.count(name) || second.at(name) != bytes) {
            check.fail("output differs between runs: " + name);
            break;
        }
        check.expect(!bytes.empty(), "output unexpectedly empty: " + name);
    }
    return check;
}

// ---------------------------------------------------------------------------
// C10: desk-scale throughput: 10K documents / ~5M tokens end to end, then
// median query latency over HTTP.

Check criterion_10() {
    Check check;
    auto dir = work_dir("c10");
    synth::Rng rng(1010);

    const int n_docs = 10000;
    const int words_per_doc = 500;
    const int n_entities = 2000;

    // inputs: raw markup with links, a title map, an entity table
    {
        std::string raw_buf;
        raw_buf.reserve(static_cast<size_t>(n_docs) * words_per_doc * 6);
        for (int d = 0; d < n_docs; ++d) {
            std::string markup;
            markup.reserve(words_per_doc * 6);
            for (int w = 0; w < words_per_doc; ++w) {
                if (w % 100 == 7) {
                    markup += "[[Entity " + std::to_string(rng.below(n_entities)) + "]] ";
                } else {
                    markup += synth::word(rng, 4000) + " ";
                }
            }
            json j;
            j["doc_id"] = "doc" + std::to_string(d);
            j["title"] = "Title " + std::to_string(d);
            j["markup"] = markup;
            raw_buf += j.dump();
            raw_buf += '\n';
        }
        io::atomic_write(dir / "documents_raw.jsonl", raw_buf);

        std::map<std::string, std::string> titles;
        std::map<std::string, EntityRef> entities;
        for (int e = 0; e < n_entities; ++e) {
            titles["Entity " + std::to_string(e)] = synth::qid_of(e);
            entities[synth::qid_of(e)] = {synth::qid_of(e), "Entity " + std::to_string(e), {}};
        }
        io::write_title_qid(dir / "title_qid.tsv", titles);
        io::write_entities(dir / "entities.tsv", entities);
    }

    auto cfg = c9::config_for(dir);
    cfg.seq_len = 512;
    cfg.batch_size = 32;
    cfg.epochs = 1;
    cfg.epoch_seeds = {1};

    auto start = std::chrono::steady_clock::now();
    pipeline::run_extract(cfg);

    // External annotator rows: EL mentions plus a small coreference cluster
    // per document, generated over the clean text.
    {
        auto documents = io::read_documents(cfg.documents);
        auto rows = io::read_raw_mentions(cfg.mentions);
        for (const auto& doc : documents) {
            // word spans via a single pass (ASCII text)
            std::vector<std::pair<int64_t, int64_t>> words;
            int64_t begin = -1;
            for (int64_t i = 0; i <= static_cast<int64_t>(doc.text.size()); ++i) {
                bool space = i == static_cast<int64_t>(doc.text.size()) ||
                             utf8::is_space(doc.text[static_cast<size_t>(i)]);
                if (!space && begin < 0) begin = i;
                if (space && begin >= 0) {
                    words.push_back({begin, i});
                    begin = -1;
                }
            }
            if (words.size() < 12) continue;
            for (int k = 0; k < 6; ++k) {
                auto [s, e] = words[static_cast<size_t>(rng.below(
                    static_cast<int64_t>(words.size())))];
                RawMention m;
                m.doc_id = doc.doc_id;
                m.start = s;
                m.end = e;
                m.source = RawMention::Kind::EntityLinking;
                m.qid = synth::qid_of(rng.below(n_entities));
                m.score = 0.5f + 0.5f * static_cast<float>(rng.unit());
                rows.push_back(std::move(m));
            }
            std::string cluster_id = doc.doc_id + "_c0";
            for (int k = 0; k < 3; ++k) {
                auto [s, e] = words[static_cast<size_t>(rng.below(
                    static_cast<int64_t>(words.size())))];
                RawMention m;
                m.doc_id = doc.doc_id;
                m.start = s;
                m.end = e;
                m.source = RawMention::Kind::Coref;
                m.cluster_id = cluster_id;
                rows.push_back(std::move(m));
            }
        }
        io::write_raw_mentions(cfg.mentions, rows);
    }

    pipeline::run_score(cfg);
    pipeline::run_chunk(cfg);
    pipeline::run_index(cfg);
    double pipeline_seconds = seconds_since(start);
    check.expect(pipeline_seconds < 600.0,
                 "pipeline took " + std::to_string(pipeline_seconds) + "s (budget 600s)");
    std::fprintf(stderr, "  c10: pipeline %.1fs over %d docs\n", pipeline_seconds, n_docs);

    // token volume sanity: ~5M tokens expected
    {
        auto stats = pipeline::corpus_stats(cfg);
        uint64_t tokens = stats.at("tokens").get<uint64_t>();
        check.expect(tokens > 4'000'000, "corpus smaller than expected: " +
                                             std::to_string(tokens) + " tokens");
    }

    // serve and measure median latency on the entity-chunks endpoint
    {
        auto idx = pipeline::load_index(cfg);
        httplib::Server server;
        service::SearchService svc(idx);
        svc.register_routes(server);
        int port = server.bind_to_any_port("127.0.0.1");
        std::thread thread([&server] { server.listen_after_bind(); });
        server.wait_until_ready();

        auto counts = idx.hyperlink_counts();
        std::vector<std::string> qids;
        for (const auto& [qid, n] : counts) qids.push_back(qid);
        check.expect(!qids.empty(), "no hyperlinked entities in the index");

        httplib::Client client("127.0.0.1", port);
        client.set_keep_alive(true);
        client.set_tcp_nodelay(true);
        std::vector<double> latencies;
        for (int i = 0; i < 300 && !qids.empty(); ++i) {
            const auto& qid = qids[static_cast<size_t>(rng.below(
                static_cast<int64_t>(qids.size())))];
            auto t0 = std::chrono::steady_clock::now();
            auto res = client.Get("/entities/" + qid + "/chunks?limit=20");
            double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
            if (!res || res->status != 200) {
                check.fail("query endpoint failed during the latency run");
                break;
            }
            latencies.push_back(ms);
        }
        server.stop();
        thread.join();

        if (!latencies.empty()) {
            std::sort(latencies.begin(), latencies.end());
            double median = latencies[latencies.size() / 2];
            std::fprintf(stderr, "  c10: median latency %.3fms over %zu requests\n", median,
                         latencies.size());
            check.expect(median < 10.0,
                         "median latency " + std::to_string(median) + "ms exceeds 10ms");
        }
    }
    return check;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Check()> run;
};

} // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "scoring exactness on the Bills fixture", criterion_1},
        {2, "coreference equations match brute force on 1000 clusters", criterion_2},
        {3, "chunker reconstruction over 500 random documents", criterion_3},
        {4, "retrieval equals linear scan on 1000 chunks", criterion_4},
        {5, "string baselines equal naive scans", criterion_5},
        {6, "oracle-judge precision: exact entity retrieval, noisy expansion", criterion_6},
        {7, "pairwise win rates match brute-force enumeration", criterion_7},
        {8, "step and co-occurrence bookkeeping vs linear scans", criterion_8},
        {9, "byte-identical outputs across pipeline re-runs", criterion_9},
        {10, "desk-scale pipeline throughput and query latency", criterion_10},
    };

    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (!wanted.empty() && !wanted.count(criterion.id)) continue;
        auto start = std::chrono::steady_clock::now();
        Check result = criterion.run();
        double elapsed = seconds_since(start);
        if (result.ok) {
            std::printf("[PASS] C%-2d %s (%.2fs)\n", criterion.id, criterion.name, elapsed);
        } else {
            std::printf("[FAIL] C%-2d %s (%.2fs): %s\n", criterion.id, criterion.name, elapsed,
                        result.detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    return failures;
}
