#pragma once
// Fact acquisition bookkeeping: a fact is a (subject, answer) entity pair
// aggregating the questions that link them. A fact is learned at a
// checkpoint when at least one of its questions is answered correctly.
// Interval statistics bin facts by their co-occurrence frequency inside the
// step interval and report learned/forgotten/net percentages.

#include "entmark/chunker.hpp"
#include "entmark/corpus.hpp"
#include "entmark/index.hpp"
#include "entmark/io.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace entmark::facts {

struct Fact {
    std::string subject_qid;
    std::string answer_qid;
    std::vector<std::string> question_ids;
};

struct CheckpointAnswers {
    int64_t step = 0;
    std::set<std::string> correct;
};

// Groups facts.tsv rows into one Fact per (subject, answer) pair.
std::vector<Fact> facts_from_rows(const std::vector<io::FactRow>& rows);

// Builds per-checkpoint answer sets; steps must be strictly increasing.
std::vector<CheckpointAnswers> checkpoints_from_rows(const std::vector<io::AnswerRow>& rows);

bool fact_learned(const Fact& fact, const CheckpointAnswers& answers);

struct FreqBin {
    std::string name;
    uint64_t min_count = 0;             // inclusive
    std::optional<uint64_t> max_count;  // exclusive
};

// Default frequency groupings: 1-100 and >= 100 co-occurring chunks.
std::vector<FreqBin> default_freq_bins();

struct BinStats {
    std::string bin;
    size_t facts = 0;
    size_t learned = 0;
    size_t forgotten = 0;
    double learned_pct = 0.0;
    double forgotten_pct = 0.0;
    double net_pct = 0.0;
};

struct IntervalStats {
    int64_t step_from = 0;  // exclusive
    int64_t step_to = 0;    // inclusive
    size_t facts_seen = 0;  // interval frequency >= 1
    std::vector<BinStats> bins;
    BinStats overall;
};

// Co-occurrence occurrences of (subject, answer) whose global step falls in
// (step_from, step_to]. A chunk revisited across epochs counts once per
// visit, so interval frequencies over a step partition sum to the total.
uint64_t interval_frequency(const index::EntityIndex& idx, const chunking::StepsMap& steps,
                            const std::string& subject_qid, const std::string& answer_qid,
                            const index::Thresholds& thresholds, int64_t step_from,
                            int64_t step_to);

// Throws when step_to <= step_from.
IntervalStats interval_stats(const std::vector<Fact>& facts, const CheckpointAnswers& at_start,
                             const CheckpointAnswers& at_end, const index::EntityIndex& idx,
                             const chunking::StepsMap& steps, const index::Thresholds& thresholds,
                             const std::vector<FreqBin>& bins = default_freq_bins());

} // namespace entmark::facts
