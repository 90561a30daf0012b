#include "entmark/facts.hpp"

#include <algorithm>
#include <stdexcept>

namespace entmark::facts {

std::vector<Fact> facts_from_rows(const std::vector<io::FactRow>& rows) {
    std::map<std::pair<std::string, std::string>, Fact> by_pair;
    for (const auto& row : rows) {
        auto& fact = by_pair[{row.subject_qid, row.answer_qid}];
        fact.subject_qid = row.subject_qid;
        fact.answer_qid = row.answer_qid;
        fact.question_ids.push_back(row.question_id);
    }
    std::vector<Fact> out;
    out.reserve(by_pair.size());
    for (auto& [key, fact] : by_pair) {
        std::sort(fact.question_ids.begin(), fact.question_ids.end());
        fact.question_ids.erase(std::unique(fact.question_ids.begin(), fact.question_ids.end()),
                                fact.question_ids.end());
        out.push_back(std::move(fact));
    }
    return out;
}

std::vector<CheckpointAnswers> checkpoints_from_rows(const std::vector<io::AnswerRow>& rows) {
    std::map<int64_t, CheckpointAnswers> by_step;
    for (const auto& row : rows) {
        auto& cp = by_step[row.step];
        cp.step = row.step;
        if (row.correct) cp.correct.insert(row.question_id);
    }
    std::vector<CheckpointAnswers> out;
    out.reserve(by_step.size());
    for (auto& [step, cp] : by_step) out.push_back(std::move(cp));
    return out;
}

bool fact_learned(const Fact& fact, const CheckpointAnswers& answers) {
    for (const auto& q : fact.question_ids)
        if (answers.correct.count(q)) return true;
    return false;
}

std::vector<FreqBin> default_freq_bins() {
    return {{"1-100", 1, 100}, {"100+", 100, std::nullopt}};
}

uint64_t interval_frequency(const index::EntityIndex& idx, const chunking::StepsMap& steps,
                            const std::string& subject_qid, const std::string& answer_qid,
                            const index::Thresholds& thresholds, int64_t step_from,
                            int64_t step_to) {
    auto a = idx.matching_chunks(subject_qid, thresholds);
    auto b = idx.matching_chunks(answer_qid, thresholds);
    std::vector<uint64_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));

    uint64_t freq = 0;
    for (uint64_t chunk_id : both) {
        const auto* assignments = steps.steps_for(chunk_id);
        if (!assignments) continue;
        for (const auto& [epoch, step] : *assignments) {
            int64_t g = steps.global_step(epoch, step);
            if (g > step_from && g <= step_to) ++freq;
        }
    }
    return freq;
}

IntervalStats interval_stats(const std::vector<Fact>& facts, const CheckpointAnswers& at_start,
                             const CheckpointAnswers& at_end, const index::EntityIndex& idx,
                             const chunking::StepsMap& steps, const index::Thresholds& thresholds,
                             const std::vector<FreqBin>& bins) {
    if (at_end.step <= at_start.step)
        throw std::invalid_argument("checkpoint interval must have positive length");

    IntervalStats stats;
    stats.step_from = at_start.step;
    stats.step_to = at_end.step;

    auto bin_name = [&bins](uint64_t freq) -> std::string {
        for (const auto& b : bins)
            if (freq >= b.min_count && (!b.max_count || freq < *b.max_count)) return b.name;
        return {};
    };

    std::map<std::string, BinStats> per_bin;
    for (const auto& b : bins) per_bin[b.name].bin = b.name;
    stats.overall.bin = "all";

    for (const auto& fact : facts) {
        uint64_t freq = interval_frequency(idx, steps, fact.subject_qid, fact.answer_qid,
                                           thresholds, stats.step_from, stats.step_to);
        if (freq == 0) continue;  // not seen in this interval
        ++stats.facts_seen;

        bool before = fact_learned(fact, at_start);
        bool after = fact_learned(fact, at_end);
        bool learned = !before && after;
        bool forgotten = before && !after;

        auto apply = [&](BinStats& b) {
            ++b.facts;
            if (learned) ++b.learned;
            if (forgotten) ++b.forgotten;
        };
        apply(stats.overall);
        auto name = bin_name(freq);
        if (!name.empty()) apply(per_bin[name]);
    }

    auto finalize = [](BinStats& b) {
        if (b.facts == 0) return;
        b.learned_pct = 100.0 * static_cast<double>(b.learned) / static_cast<double>(b.facts);
        b.forgotten_pct = 100.0 * static_cast<double>(b.forgotten) / static_cast<double>(b.facts);
        b.net_pct = b.learned_pct - b.forgotten_pct;
    };
    finalize(stats.overall);
    for (auto& [name, b] : per_bin) {
        finalize(b);
        stats.bins.push_back(b);
    }
    return stats;
}

} // namespace entmark::facts
