#include "entmark/eval.hpp"

#include "entmark/io.hpp"
#include "entmark/utf8.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

using nlohmann::json;

namespace entmark::eval {

namespace {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

std::vector<size_t> sample_without_replacement(size_t n, size_t count, uint64_t seed) {
    std::vector<size_t> pool(n);
    for (size_t i = 0; i < n; ++i) pool[i] = i;
    count = std::min(count, n);
    uint64_t state = seed;
    // Partial Fisher-Yates: the first `count` slots become the sample.
    for (size_t i = 0; i < count; ++i) {
        size_t j = i + static_cast<size_t>(splitmix64(state) % (n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

// ---------------------------------------------------------------------------
// Judges

ReplayJudge::ReplayJudge(const std::filesystem::path& judgments_file) {
    for (const auto& row : io::read_judgments(judgments_file))
        cache_[{row.qid, row.chunk_id, row.window_index}] = row.yes;
}

std::vector<bool> ReplayJudge::judge(const JudgeRequest& request) {
    std::vector<bool> out;
    out.reserve(request.windows.size());
    for (int32_t i = 0; i < static_cast<int32_t>(request.windows.size()); ++i) {
        auto it = cache_.find({request.qid, request.chunk_id, i});
        if (it == cache_.end())
            throw std::runtime_error("no cached judgment for " + request.qid + "/chunk " +
                                     std::to_string(request.chunk_id) + "/window " +
                                     std::to_string(i));
        out.push_back(it->second);
    }
    return out;
}

CachingJudge::CachingJudge(Judge& inner, std::filesystem::path cache_file)
    : inner_(inner), cache_file_(std::move(cache_file)) {
    if (std::filesystem::exists(cache_file_)) {
        for (const auto& row : io::read_judgments(cache_file_))
            cache_[{row.qid, row.chunk_id, row.window_index}] = row.yes;
    }
}

std::vector<bool> CachingJudge::judge(const JudgeRequest& request) {
    std::vector<bool> out(request.windows.size(), false);
    std::vector<int32_t> missing;
    for (int32_t i = 0; i < static_cast<int32_t>(request.windows.size()); ++i) {
        auto it = cache_.find({request.qid, request.chunk_id, i});
        if (it != cache_.end())
            out[static_cast<size_t>(i)] = it->second;
        else
            missing.push_back(i);
    }
    if (!missing.empty()) {
        auto fresh = inner_.judge(request);
        for (int32_t i : missing) {
            bool v = fresh.at(static_cast<size_t>(i));
            out[static_cast<size_t>(i)] = v;
            cache_[{request.qid, request.chunk_id, i}] = v;
        }
    }
    return out;
}

void CachingJudge::flush() const {
    std::vector<io::JudgmentRow> rows;
    rows.reserve(cache_.size());
    for (const auto& [key, yes] : cache_)
        rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), yes});
    io::write_judgments(cache_file_, rows);
}

HttpJudge::HttpJudge(std::string host, int port, std::string path)
    : host_(std::move(host)), port_(port), path_(std::move(path)) {}

std::vector<bool> HttpJudge::judge(const JudgeRequest& request) {
    httplib::Client client(host_, port_);
    client.set_read_timeout(30, 0);
    std::vector<bool> out;
    out.reserve(request.windows.size());
    for (const auto& window : request.windows) {
        json body;
        body["entity_name"] = request.entity_name;
        body["entity_description"] = request.entity_description;
        body["context_window"] = window;
        auto res = client.Post(path_, body.dump(), "application/json");
        if (!res || res->status != 200)
            throw std::runtime_error("judge request failed for " + request.qid);
        std::string text = res->body;
        // Accept either a bare Yes/No token or {"verdict": "Yes"}.
        if (!text.empty() && text.front() == '{') {
            auto j = json::parse(text);
            text = j.value("verdict", std::string{});
        }
        auto folded = utf8::ascii_fold(text);
        if (folded.rfind("yes", 0) == 0)
            out.push_back(true);
        else if (folded.rfind("no", 0) == 0)
            out.push_back(false);
        else
            throw std::runtime_error("unparseable judge verdict: " + res->body);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<BinSpec> default_bins() {
    return {{"tail", 0, 10}, {"torso", 10, 1000}, {"head", 1000, std::nullopt}};
}

std::string bin_of(uint64_t count, const std::vector<BinSpec>& bins) {
    for (const auto& b : bins) {
        if (count >= b.min_count && (!b.max_count || count < *b.max_count)) return b.name;
    }
    return {};
}

EntitySample stratified_sample(const std::map<std::string, uint64_t>& hyperlink_counts,
                               const std::vector<BinSpec>& bins,
                               const std::map<std::string, size_t>& per_bin_counts, uint64_t seed) {
    EntitySample sample;
    sample.seed = seed;

    std::map<std::string, std::vector<std::string>> members;
    for (const auto& [qid, count] : hyperlink_counts) {
        auto bin = bin_of(count, bins);
        if (!bin.empty()) members[bin].push_back(qid);
    }

    uint64_t bin_index = 0;
    for (const auto& b : bins) {
        ++bin_index;
        auto want_it = per_bin_counts.find(b.name);
        if (want_it == per_bin_counts.end() || want_it->second == 0) continue;
        size_t want = want_it->second;
        auto& pool = members[b.name];  // sorted by qid (map order)
        if (pool.size() < want) {
            sample.shortfalls.push_back({b.name, want, pool.size()});
        }
        auto picks = sample_without_replacement(pool.size(), want, seed ^ (bin_index * 0x9E3779B9ull));
        std::sort(picks.begin(), picks.end());
        for (size_t p : picks) {
            sample.per_bin[b.name].push_back(pool[p]);
            sample.entities.push_back(pool[p]);
        }
    }
    return sample;
}

// ---------------------------------------------------------------------------
// Windows

std::vector<std::string> context_windows(std::string_view chunk_text,
                                         std::vector<WindowSpan> spans, bool prioritize_by_score,
                                         int64_t window_chars, size_t max_mentions) {
    if (prioritize_by_score) {
        std::stable_sort(spans.begin(), spans.end(), [](const WindowSpan& a, const WindowSpan& b) {
            return a.priority > b.priority;
        });
    }
    if (spans.size() > max_mentions) spans.resize(max_mentions);

    int64_t text_len = static_cast<int64_t>(utf8::cp_count(chunk_text));
    std::vector<std::string> out;
    out.reserve(spans.size());
    for (const auto& s : spans) {
        int64_t lo = std::max<int64_t>(0, s.start - window_chars);
        int64_t hi = std::min<int64_t>(text_len, s.end + window_chars);
        if (lo >= hi) continue;
        out.emplace_back(utf8::cp_slice(chunk_text, static_cast<size_t>(lo), static_cast<size_t>(hi)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Precision / win rates

namespace {

bool chunk_is_yes(Judge& judge, const EntityRef& entity, const std::string& description,
                  const RetrievedChunk& chunk) {
    JudgeRequest req;
    req.qid = entity.qid;
    req.chunk_id = chunk.chunk_id;
    req.entity_name = entity.canonical_name;
    req.entity_description = description;
    req.windows = chunk.windows;
    if (req.windows.empty()) req.windows.push_back("");
    auto verdicts = judge.judge(req);
    return std::any_of(verdicts.begin(), verdicts.end(), [](bool v) { return v; });
}

} // namespace

PrecisionResult precision_at_k(const std::vector<RetrievedChunk>& ranked, size_t k, Judge& judge,
                               const EntityRef& entity, const std::string& description,
                               uint64_t sample_seed) {
    PrecisionResult result;
    if (ranked.empty()) return result;
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    result.shortfall = ranked.size() < k;
    result.considered = std::min(k, ranked.size());

    std::vector<const RetrievedChunk*> to_judge;
    if (k >= 100 && result.considered > 100) {
        result.sampled = true;
        auto picks = sample_without_replacement(result.considered, 100, sample_seed);
        std::sort(picks.begin(), picks.end());
        for (size_t p : picks) to_judge.push_back(&ranked[p]);
    } else {
        for (size_t i = 0; i < result.considered; ++i) to_judge.push_back(&ranked[i]);
    }

    for (const auto* chunk : to_judge) {
        ++result.judged;
        if (chunk_is_yes(judge, entity, description, *chunk)) ++result.yes;
    }
    result.precision = static_cast<double>(result.yes) / static_cast<double>(result.judged);
    return result;
}

WinRateReport pairwise_winrates(const std::vector<Method>& methods,
                                const std::vector<EntityRef>& entities,
                                const std::map<std::string, std::string>& descriptions,
                                Judge& judge, size_t cap, uint64_t seed) {
    WinRateReport report;
    report.cap = cap;
    report.seed = seed;
    for (const auto& m : methods) report.methods.push_back(m.name);
    for (const auto& e : entities) report.entities.push_back(e.qid);

    // Pre-drawn seeds per (method, entity) so judging order cannot matter.
    uint64_t draw_state = seed;
    std::map<std::pair<std::string, std::string>, uint64_t> cap_seeds;
    for (const auto& m : methods)
        for (const auto& e : entities) cap_seeds[{m.name, e.qid}] = splitmix64(draw_state);

    for (const auto& method : methods) {
        for (const auto& entity : entities) {
            auto retrieved = method.retrieve(entity);
            std::vector<const RetrievedChunk*> judged_set;
            if (retrieved.size() > cap) {
                auto picks = sample_without_replacement(retrieved.size(), cap,
                                                        cap_seeds[{method.name, entity.qid}]);
                std::sort(picks.begin(), picks.end());
                for (size_t p : picks) judged_set.push_back(&retrieved[p]);
            } else {
                for (const auto& r : retrieved) judged_set.push_back(&r);
            }
            std::string description;
            if (auto it = descriptions.find(entity.qid); it != descriptions.end())
                description = it->second;
            size_t yes = 0;
            for (const auto* chunk : judged_set)
                if (chunk_is_yes(judge, entity, description, *chunk)) ++yes;
            report.yes_counts[method.name][entity.qid] = yes;
        }
    }

    size_t n_entities = entities.size();
    for (size_t a = 0; a < methods.size(); ++a) {
        for (size_t b = a + 1; b < methods.size(); ++b) {
            PairStats stats;
            stats.method_a = methods[a].name;
            stats.method_b = methods[b].name;
            for (const auto& e : entities) {
                size_t ya = report.yes_counts[stats.method_a][e.qid];
                size_t yb = report.yes_counts[stats.method_b][e.qid];
                if (ya > yb)
                    ++stats.wins_a;
                else if (yb > ya)
                    ++stats.wins_b;
                else
                    ++stats.ties;
            }
            if (n_entities > 0) {
                stats.win_pct = 100.0 * static_cast<double>(stats.wins_a) / static_cast<double>(n_entities);
                stats.loss_pct = 100.0 * static_cast<double>(stats.wins_b) / static_cast<double>(n_entities);
                stats.tie_pct = 100.0 * static_cast<double>(stats.ties) / static_cast<double>(n_entities);
            }
            report.pairs.push_back(stats);
        }
    }
    return report;
}

std::map<std::string, std::vector<MarginPoint>> winmargin_distribution(
    const std::map<std::string, int64_t>& margins_by_entity,
    const std::map<std::string, uint64_t>& hyperlink_counts, const std::vector<BinSpec>& bins) {
    std::map<std::string, std::vector<int64_t>> per_bin;
    for (const auto& [qid, margin] : margins_by_entity) {
        uint64_t count = 0;
        if (auto it = hyperlink_counts.find(qid); it != hyperlink_counts.end()) count = it->second;
        auto bin = bin_of(count, bins);
        if (!bin.empty()) per_bin[bin].push_back(margin);
    }

    std::map<std::string, std::vector<MarginPoint>> out;
    for (auto& [bin, margins] : per_bin) {
        std::sort(margins.begin(), margins.end());
        auto& points = out[bin];
        size_t total = margins.size();
        size_t i = 0;
        while (i < total) {
            size_t j = i;
            while (j < total && margins[j] == margins[i]) ++j;
            points.push_back({margins[i], 100.0 * static_cast<double>(j) / static_cast<double>(total)});
            i = j;
        }
    }
    return out;
}

} // namespace entmark::eval
