#include "entmark/chunker.hpp"

#include "entmark/utf8.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace entmark::chunking {

namespace {

int64_t fnv1a_31(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return static_cast<int64_t>(h & 0x7FFFFFFFull);
}

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

Encoding WhitespaceTokenizer::encode(std::string_view text) const {
    Encoding enc;
    size_t byte = 0;
    int64_t cp = 0;
    while (byte < text.size()) {
        // skip whitespace
        while (byte < text.size() && utf8::is_space(text[byte])) {
            byte += utf8::seq_len(text, byte);
            ++cp;
        }
        if (byte >= text.size()) break;
        size_t tok_byte = byte;
        int64_t tok_cp = cp;
        while (byte < text.size() && !utf8::is_space(text[byte])) {
            byte += utf8::seq_len(text, byte);
            ++cp;
        }
        enc.ids.push_back(fnv1a_31(text.substr(tok_byte, byte - tok_byte)));
        enc.offsets.push_back({tok_cp, cp});
    }
    return enc;
}

std::vector<TokRange> mention_token_ranges(const std::vector<TokenSpan>& offsets,
                                           const std::vector<Mention>& mentions) {
    std::vector<TokRange> out(mentions.size());
    for (size_t i = 0; i < mentions.size(); ++i) {
        const auto& span = mentions[i].span;
        // first token whose end is past the span start
        auto first = std::upper_bound(offsets.begin(), offsets.end(), span.start,
                                      [](int64_t v, const TokenSpan& t) { return v < t.end; });
        int32_t lo = static_cast<int32_t>(first - offsets.begin());
        int32_t hi = lo;
        while (hi < static_cast<int32_t>(offsets.size()) && offsets[hi].start < span.end) ++hi;
        if (lo < hi)
            out[i] = {lo, hi};
        else
            out[i] = {lo, lo};  // empty: mention covers no token
    }
    return out;
}

ChunkPlan plan_chunks(const std::string& doc_id, const std::vector<TokenSpan>& token_offsets,
                      const std::vector<Mention>& mentions, int32_t seq_len) {
    return plan_chunks(doc_id, token_offsets, mentions, std::vector<int32_t>{seq_len});
}

ChunkPlan plan_chunks(const std::string& doc_id, const std::vector<TokenSpan>& token_offsets,
                      const std::vector<Mention>& mentions, const std::vector<int32_t>& schedule) {
    if (schedule.empty()) throw std::invalid_argument("empty sequence length schedule");
    for (int32_t l : schedule)
        if (l < 1) throw std::invalid_argument("sequence length must be >= 1");

    ChunkPlan plan;
    plan.doc_id = doc_id;
    auto ranges = mention_token_ranges(token_offsets, mentions);

    std::set<size_t> dropped;
    auto drop = [&](size_t idx, const char* reason) {
        if (!dropped.insert(idx).second) return;
        plan.dropped_mentions.push_back(idx);
        plan.drop_report.push_back({doc_id, mentions[idx].span.start, mentions[idx].span.end,
                                    ranges[idx].start, ranges[idx].end, reason});
    };
    for (size_t i = 0; i < mentions.size(); ++i)
        if (ranges[i].empty()) drop(i, "no-token-overlap");

    const int32_t total = static_cast<int32_t>(token_offsets.size());
    int32_t cur = 0;
    size_t chunk_index = 0;
    while (cur < total) {
        int32_t target = schedule[chunk_index % schedule.size()];
        int32_t cut = std::min(cur + target, total);
        while (cut < total) {
            // Mentions the cut would split.
            int32_t min_start = cut;
            bool head_conflict = false;
            for (size_t i = 0; i < mentions.size(); ++i) {
                if (dropped.count(i)) continue;
                const auto& r = ranges[i];
                if (r.start < cut && cut < r.end) {
                    min_start = std::min(min_start, r.start);
                    if (r.start <= cur) head_conflict = true;
                }
            }
            if (min_start == cut) break;  // nothing split
            if (!head_conflict) {
                // Terminate just before the earliest straddling mention.
                cut = min_start;
                continue;
            }
            // A straddler is anchored at the chunk head; it cannot fit no
            // matter where we cut. Drop it and retry with the full window.
            for (size_t i = 0; i < mentions.size(); ++i) {
                if (dropped.count(i)) continue;
                const auto& r = ranges[i];
                if (r.start <= cur && r.start < cut && cut < r.end)
                    drop(i, r.end - r.start > target ? "token-range-exceeds-seq-len"
                                                     : "overlapping-mention-conflict");
            }
            cut = std::min(cur + target, total);
        }
        plan.boundaries.push_back({cur, cut, target});
        cur = cut;
        ++chunk_index;
    }
    return plan;
}

std::vector<Chunk> materialize_chunks(const ChunkPlan& plan, const Document& doc,
                                      const Encoding& encoding,
                                      const std::vector<Mention>& mentions, int64_t pad_token_id,
                                      uint64_t first_chunk_id) {
    std::set<size_t> dropped(plan.dropped_mentions.begin(), plan.dropped_mentions.end());
    auto ranges = mention_token_ranges(encoding.offsets, mentions);

    std::vector<Chunk> out;
    out.reserve(plan.boundaries.size());
    uint64_t next_id = first_chunk_id;
    for (const auto& b : plan.boundaries) {
        Chunk chunk;
        chunk.chunk_id = next_id++;
        chunk.doc_id = doc.doc_id;
        chunk.content_len = b.tok_end - b.tok_start;
        chunk.token_ids.assign(encoding.ids.begin() + b.tok_start, encoding.ids.begin() + b.tok_end);
        chunk.token_ids.resize(static_cast<size_t>(b.target_len), pad_token_id);

        int64_t char_start = encoding.offsets[b.tok_start].start;
        int64_t char_end = encoding.offsets[b.tok_end - 1].end;
        chunk.text = std::string(utf8::cp_slice(doc.text, static_cast<size_t>(char_start),
                                                static_cast<size_t>(char_end)));

        for (size_t i = 0; i < mentions.size(); ++i) {
            if (dropped.count(i)) continue;
            const auto& r = ranges[i];
            if (r.start < b.tok_start || r.end > b.tok_end) continue;
            ChunkMention cm;
            cm.tok_start = r.start - b.tok_start;
            cm.tok_end = r.end - b.tok_start;
            cm.char_start = std::max<int64_t>(mentions[i].span.start - char_start, 0);
            cm.char_end = std::min<int64_t>(mentions[i].span.end - char_start, char_end - char_start);
            cm.candidates = mentions[i].candidates;
            cm.cluster_id = mentions[i].cluster_id;
            chunk.mentions.push_back(std::move(cm));
        }
        out.push_back(std::move(chunk));
    }
    return out;
}

std::vector<size_t> seeded_permutation(size_t n, uint64_t seed) {
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    uint64_t state = seed;
    for (size_t i = n; i > 1; --i) {
        size_t j = static_cast<size_t>(splitmix64(state) % i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::vector<StepAssignment> steps_from_order(const std::vector<uint64_t>& ordered_ids,
                                             int32_t batch_size, int32_t epoch) {
    std::vector<StepAssignment> out;
    out.reserve(ordered_ids.size());
    for (size_t pos = 0; pos < ordered_ids.size(); ++pos)
        out.push_back({ordered_ids[pos], epoch, static_cast<int32_t>(pos / batch_size)});
    return out;
}

std::vector<StepAssignment> assign_steps(const std::vector<uint64_t>& chunk_ids,
                                         int32_t batch_size, int32_t epochs,
                                         const std::vector<uint64_t>& epoch_seeds) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    std::vector<uint64_t> seeds = epoch_seeds;
    if (seeds.size() == 1 && epochs > 1) {
        for (int32_t e = 1; e < epochs; ++e) seeds.push_back(seeds[0] + static_cast<uint64_t>(e));
    }
    if (static_cast<int32_t>(seeds.size()) != epochs)
        throw std::invalid_argument("need one seed per epoch (or a single base seed)");

    std::vector<uint64_t> sorted_ids = chunk_ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());

    std::vector<StepAssignment> out;
    out.reserve(sorted_ids.size() * static_cast<size_t>(epochs));
    for (int32_t e = 0; e < epochs; ++e) {
        auto perm = seeded_permutation(sorted_ids.size(), seeds[static_cast<size_t>(e)]);
        std::vector<uint64_t> ordered(sorted_ids.size());
        for (size_t pos = 0; pos < perm.size(); ++pos) ordered[pos] = sorted_ids[perm[pos]];
        auto epoch_rows = steps_from_order(ordered, batch_size, e);
        out.insert(out.end(), epoch_rows.begin(), epoch_rows.end());
    }
    return out;
}

StepsMap::StepsMap(const std::vector<StepAssignment>& rows) {
    for (const auto& r : rows) {
        by_chunk_[r.chunk_id].push_back({r.epoch, r.step});
        by_step_[{r.epoch, r.step}].push_back(r.chunk_id);
        epochs_ = std::max(epochs_, r.epoch + 1);
        steps_per_epoch_ = std::max(steps_per_epoch_, r.step + 1);
    }
    for (auto& [id, steps] : by_chunk_) std::sort(steps.begin(), steps.end());
    for (auto& [key, ids] : by_step_) std::sort(ids.begin(), ids.end());
}

const std::vector<std::pair<int32_t, int32_t>>* StepsMap::steps_for(uint64_t chunk_id) const {
    auto it = by_chunk_.find(chunk_id);
    return it == by_chunk_.end() ? nullptr : &it->second;
}

const std::vector<uint64_t>* StepsMap::chunks_for(int32_t epoch, int32_t step) const {
    auto it = by_step_.find({epoch, step});
    return it == by_step_.end() ? nullptr : &it->second;
}

std::vector<StepAssignment> StepsMap::rows() const {
    std::vector<StepAssignment> out;
    for (const auto& [id, steps] : by_chunk_)
        for (const auto& [epoch, step] : steps) out.push_back({id, epoch, step});
    return out;
}

} // namespace entmark::chunking
