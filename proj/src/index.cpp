#include "entmark/index.hpp"

#include "entmark/io.hpp"
#include "entmark/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

using nlohmann::json;

namespace entmark::index {

namespace {

constexpr char kPostingsMagic[8] = {'E', 'M', 'P', 'S', 'T', '0', '1', '\n'};
constexpr char kChunksMagic[8] = {'E', 'M', 'C', 'H', 'K', '0', '1', '\n'};

MentionScores scores_of(const CandidateScore& c) { return {c.h, c.el, c.c, c.cc}; }

bool scores_pass(const Thresholds& t, const MentionScores& s) {
    CandidateScore c;
    c.h = s.h;
    c.el = s.el;
    c.c = s.c;
    c.cc = s.cc;
    return t.passes(c);
}

// --- little-endian binary primitives -----------------------------------

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

void put_varint(std::string& buf, uint64_t v) {
    while (v >= 0x80) {
        buf.push_back(static_cast<char>((v & 0x7F) | 0x80));
        v >>= 7;
    }
    buf.push_back(static_cast<char>(v));
}

void put_zigzag(std::string& buf, int64_t v) {
    put_varint(buf, (static_cast<uint64_t>(v) << 1) ^ static_cast<uint64_t>(v >> 63));
}

void put_string(std::string& buf, std::string_view s) {
    put_varint(buf, s.size());
    buf.append(s);
}

struct Reader {
    std::string_view data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size()) throw std::runtime_error("truncated index file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    uint64_t varint() {
        uint64_t v = 0;
        int shift = 0;
        while (true) {
            need(1);
            unsigned char b = static_cast<unsigned char>(data[pos++]);
            v |= static_cast<uint64_t>(b & 0x7F) << shift;
            if (!(b & 0x80)) break;
            shift += 7;
        }
        return v;
    }
    int64_t zigzag() {
        uint64_t v = varint();
        return static_cast<int64_t>((v >> 1) ^ (~(v & 1) + 1));
    }
    std::string str() {
        size_t n = varint();
        need(n);
        std::string s(data.substr(pos, n));
        pos += n;
        return s;
    }
};

// Presence mask + four fixed-width floats (absent slots written as 0).
void put_scores(std::string& buf, const MentionScores& s) {
    uint8_t mask = 0;
    if (s.h) mask |= 1;
    if (s.el) mask |= 2;
    if (s.c) mask |= 4;
    if (s.cc) mask |= 8;
    buf.push_back(static_cast<char>(mask));
    put_f32(buf, s.h.value_or(0.0f));
    put_f32(buf, s.el.value_or(0.0f));
    put_f32(buf, s.c.value_or(0.0f));
    put_f32(buf, s.cc.value_or(0.0f));
}

MentionScores read_scores(Reader& r) {
    r.need(1);
    uint8_t mask = static_cast<uint8_t>(r.data[r.pos++]);
    float h = r.f32(), el = r.f32(), c = r.f32(), cc = r.f32();
    MentionScores s;
    if (mask & 1) s.h = h;
    if (mask & 2) s.el = el;
    if (mask & 4) s.c = c;
    if (mask & 8) s.cc = cc;
    return s;
}

void put_chunk(std::string& buf, const Chunk& c) {
    put_u64(buf, c.chunk_id);
    put_string(buf, c.doc_id);
    put_zigzag(buf, c.epoch);
    put_zigzag(buf, c.step);
    put_varint(buf, c.token_ids.size());
    for (int64_t id : c.token_ids) put_zigzag(buf, id);
    put_varint(buf, static_cast<uint64_t>(c.content_len));
    put_string(buf, c.text);
    put_varint(buf, c.mentions.size());
    for (const auto& m : c.mentions) {
        put_zigzag(buf, m.tok_start);
        put_zigzag(buf, m.tok_end);
        put_zigzag(buf, m.char_start);
        put_zigzag(buf, m.char_end);
        buf.push_back(m.cluster_id ? 1 : 0);
        if (m.cluster_id) put_string(buf, *m.cluster_id);
        put_varint(buf, m.candidates.size());
        for (const auto& cand : m.candidates) {
            put_string(buf, cand.qid);
            put_scores(buf, scores_of(cand));
            buf.push_back(static_cast<char>(cand.sources));
        }
    }
}

Chunk read_chunk(Reader& r) {
    Chunk c;
    c.chunk_id = r.u64();
    c.doc_id = r.str();
    c.epoch = static_cast<int32_t>(r.zigzag());
    c.step = static_cast<int32_t>(r.zigzag());
    size_t n = r.varint();
    c.token_ids.resize(n);
    for (size_t i = 0; i < n; ++i) c.token_ids[i] = r.zigzag();
    c.content_len = static_cast<int32_t>(r.varint());
    c.text = r.str();
    size_t nm = r.varint();
    c.mentions.resize(nm);
    for (auto& m : c.mentions) {
        m.tok_start = static_cast<int32_t>(r.zigzag());
        m.tok_end = static_cast<int32_t>(r.zigzag());
        m.char_start = r.zigzag();
        m.char_end = r.zigzag();
        r.need(1);
        bool has_cluster = r.data[r.pos++] != 0;
        if (has_cluster) m.cluster_id = r.str();
        size_t nc = r.varint();
        m.candidates.resize(nc);
        for (auto& cand : m.candidates) {
            cand.qid = r.str();
            auto s = read_scores(r);
            cand.h = s.h;
            cand.el = s.el;
            cand.c = s.c;
            cand.cc = s.cc;
            r.need(1);
            cand.sources = static_cast<SourceMask>(r.data[r.pos++]);
        }
    }
    return c;
}

uint64_t fnv1a(std::string_view s, uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open index file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Occurrences of `needle` in `haystack` as char spans; both already folded
// when case-insensitive. Byte offsets converted to code point offsets.
void find_occurrences(std::string_view haystack, std::string_view needle, bool word_boundary,
                      std::vector<std::pair<int64_t, int64_t>>& out) {
    if (needle.empty()) return;
    auto is_word_byte = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || static_cast<unsigned char>(c) >= 0x80;
    };
    size_t byte = 0;
    int64_t cp = 0;
    size_t needle_cp = utf8::cp_count(needle);
    while (byte + needle.size() <= haystack.size()) {
        if (haystack.compare(byte, needle.size(), needle) == 0) {
            bool ok = true;
            if (word_boundary) {
                if (byte > 0 && is_word_byte(haystack[byte - 1]) && is_word_byte(needle.front()))
                    ok = false;
                size_t after = byte + needle.size();
                if (after < haystack.size() && is_word_byte(haystack[after]) &&
                    is_word_byte(needle.back()))
                    ok = false;
            }
            if (ok) out.push_back({cp, cp + static_cast<int64_t>(needle_cp)});
        }
        size_t n = utf8::seq_len(haystack, byte);
        byte += n;
        ++cp;
    }
}

} // namespace

double rank_mention(const MentionScores& scores, const RankWeights& weights) {
    double num = 0.0, den = 0.0;
    if (scores.h) {
        num += static_cast<double>(weights.h) * *scores.h;
        den += weights.h;
    }
    if (scores.el) {
        num += static_cast<double>(weights.el) * *scores.el;
        den += weights.el;
    }
    if (scores.c) {
        num += static_cast<double>(weights.c) * *scores.c;
        den += weights.c;
    }
    if (scores.cc) {
        num += static_cast<double>(weights.cc) * *scores.cc;
        den += weights.cc;
    }
    return den == 0.0 ? 0.0 : num / den;
}

double rank_chunk(const std::vector<MentionScores>& matching_mentions, const RankWeights& weights) {
    double best = 0.0;
    for (const auto& m : matching_mentions) best = std::max(best, rank_mention(m, weights));
    return best;
}

std::optional<BaselineMode> baseline_mode_from_string(std::string_view s) {
    if (s == "cs-canonical") return BaselineMode::CsCanonical;
    if (s == "cs-expanded") return BaselineMode::CsExpanded;
    if (s == "ci-canonical") return BaselineMode::CiCanonical;
    if (s == "ci-expanded") return BaselineMode::CiExpanded;
    return std::nullopt;
}

std::string to_string(BaselineMode mode) {
    switch (mode) {
        case BaselineMode::CsCanonical: return "cs-canonical";
        case BaselineMode::CsExpanded: return "cs-expanded";
        case BaselineMode::CiCanonical: return "ci-canonical";
        case BaselineMode::CiExpanded: return "ci-expanded";
    }
    return {};
}

EntityIndex EntityIndex::build(std::vector<Chunk> chunks, RankWeights weights, Thresholds defaults) {
    EntityIndex idx;
    idx.weights_ = weights;
    idx.defaults_ = defaults;
    std::sort(chunks.begin(), chunks.end(),
              [](const Chunk& a, const Chunk& b) { return a.chunk_id < b.chunk_id; });
    idx.chunks_ = std::move(chunks);

    uint64_t hash = 1469598103934665603ull;
    for (size_t i = 0; i < idx.chunks_.size(); ++i) {
        const Chunk& c = idx.chunks_[i];
        if (!idx.by_id_.emplace(c.chunk_id, i).second)
            throw std::runtime_error("duplicate chunk id " + std::to_string(c.chunk_id));
        std::string record;
        put_chunk(record, c);
        hash = fnv1a(record, hash);
        idx.folded_texts_.push_back(utf8::ascii_fold(c.text));

        // One postings entry per (qid, chunk); rank over all its mentions.
        std::map<std::string, PostingsEntry> per_qid;
        for (uint32_t mi = 0; mi < c.mentions.size(); ++mi) {
            for (const auto& cand : c.mentions[mi].candidates) {
                auto& entry = per_qid[cand.qid];
                entry.chunk_id = c.chunk_id;
                entry.mentions.push_back({mi, scores_of(cand)});
            }
        }
        for (auto& [qid, entry] : per_qid) {
            double best = 0.0;
            for (const auto& pm : entry.mentions)
                best = std::max(best, rank_mention(pm.scores, weights));
            entry.rank_score = static_cast<float>(best);
            idx.postings_[qid].push_back(std::move(entry));
        }
    }
    idx.corpus_hash_ = hex64(hash);

    // Postings ordered by (rank desc, chunk id asc).
    for (auto& [qid, list] : idx.postings_) {
        std::stable_sort(list.begin(), list.end(), [](const PostingsEntry& a, const PostingsEntry& b) {
            if (a.rank_score != b.rank_score) return a.rank_score > b.rank_score;
            return a.chunk_id < b.chunk_id;
        });
    }
    return idx;
}

const Chunk* EntityIndex::chunk(uint64_t chunk_id) const {
    auto it = by_id_.find(chunk_id);
    return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

QueryResult EntityIndex::query_entity(const QuerySpec& spec) const {
    if (!spec.thresholds.any()) throw std::invalid_argument("query needs at least one threshold");
    if (spec.thresholds.h && *spec.thresholds.h != 1.0f)
        throw std::invalid_argument("hyperlink threshold must be 1 when set");
    if (spec.limit < 1) throw std::invalid_argument("limit must be >= 1");

    QueryResult result;
    auto it = postings_.find(spec.qid);
    if (it == postings_.end()) return result;

    std::vector<Hit> hits;
    for (const auto& entry : it->second) {
        std::vector<MentionScores> matching;
        std::vector<uint32_t> matching_idx;
        for (const auto& pm : entry.mentions) {
            if (scores_pass(spec.thresholds, pm.scores)) {
                matching.push_back(pm.scores);
                matching_idx.push_back(pm.mention_index);
            }
        }
        if (matching.empty()) continue;
        Hit hit;
        hit.chunk_id = entry.chunk_id;
        hit.rank_score = rank_chunk(matching, weights_);
        const Chunk* c = chunk(entry.chunk_id);
        for (size_t i = 0; i < matching.size(); ++i) {
            const auto& m = c->mentions[matching_idx[i]];
            hit.matches.push_back({m.char_start, m.char_end, spec.qid, matching[i]});
        }
        hits.push_back(std::move(hit));
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.rank_score != b.rank_score) return a.rank_score > b.rank_score;
        return a.chunk_id < b.chunk_id;
    });
    result.total = hits.size();
    size_t from = std::min(spec.offset, hits.size());
    size_t take = std::min(spec.limit, hits.size() - from);
    result.hits.assign(std::make_move_iterator(hits.begin() + static_cast<ptrdiff_t>(from)),
                       std::make_move_iterator(hits.begin() + static_cast<ptrdiff_t>(from + take)));
    return result;
}

std::vector<StringHit> EntityIndex::query_string(BaselineMode mode, const EntityRef& entity,
                                                 size_t k, bool word_boundary) const {
    bool fold = mode == BaselineMode::CiCanonical || mode == BaselineMode::CiExpanded;
    bool expanded = mode == BaselineMode::CsExpanded || mode == BaselineMode::CiExpanded;

    std::set<std::string> patterns;
    auto add_pattern = [&](const std::string& name) {
        if (name.empty()) return;
        patterns.insert(fold ? utf8::ascii_fold(name) : name);
    };
    add_pattern(entity.canonical_name);
    if (expanded)
        for (const auto& alias : entity.aliases) add_pattern(alias);

    std::vector<StringHit> hits;
    for (size_t i = 0; i < chunks_.size(); ++i) {
        const std::string& text = fold ? folded_texts_[i] : chunks_[i].text;
        std::vector<std::pair<int64_t, int64_t>> spans;
        for (const auto& pat : patterns) find_occurrences(text, pat, word_boundary, spans);
        if (spans.empty()) continue;
        std::sort(spans.begin(), spans.end());
        spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
        hits.push_back({chunks_[i].chunk_id, std::move(spans)});
    }
    std::sort(hits.begin(), hits.end(), [](const StringHit& a, const StringHit& b) {
        if (a.matches.size() != b.matches.size()) return a.matches.size() > b.matches.size();
        return a.chunk_id < b.chunk_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<uint64_t> EntityIndex::matching_chunks(const std::string& qid,
                                                   const Thresholds& thresholds) const {
    std::vector<uint64_t> out;
    auto it = postings_.find(qid);
    if (it == postings_.end()) return out;
    for (const auto& entry : it->second) {
        for (const auto& pm : entry.mentions) {
            if (scores_pass(thresholds, pm.scores)) {
                out.push_back(entry.chunk_id);
                break;
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<int32_t, int32_t>> EntityIndex::steps_for_entity(
    const std::string& qid, const Thresholds& thresholds) const {
    std::set<std::pair<int32_t, int32_t>> steps;
    for (uint64_t id : matching_chunks(qid, thresholds)) {
        const auto* s = steps_.steps_for(id);
        if (s) steps.insert(s->begin(), s->end());
    }
    return {steps.begin(), steps.end()};
}

uint64_t EntityIndex::cooccur_count(const std::string& qid_a, const std::string& qid_b,
                                    const Thresholds& thresholds) const {
    auto a = matching_chunks(qid_a, thresholds);
    auto b = matching_chunks(qid_b, thresholds);
    std::vector<uint64_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return both.size();
}

std::map<std::string, uint64_t> EntityIndex::hyperlink_counts() const {
    std::map<std::string, uint64_t> out;
    for (const auto& [qid, list] : postings_) {
        uint64_t n = 0;
        for (const auto& entry : list)
            for (const auto& pm : entry.mentions)
                if (pm.scores.h && *pm.scores.h >= 1.0f) ++n;
        if (n > 0) out[qid] = n;
    }
    return out;
}

void EntityIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    std::string chunks_buf(kChunksMagic, sizeof(kChunksMagic));
    put_u64(chunks_buf, chunks_.size());
    {
        std::string records;
        std::vector<uint64_t> offsets;
        for (const auto& c : chunks_) {
            offsets.push_back(records.size());
            put_chunk(records, c);
        }
        for (uint64_t off : offsets) put_u64(chunks_buf, off);
        chunks_buf += records;
    }
    io::atomic_write(dir / "chunks.bin", chunks_buf);

    std::string post_buf(kPostingsMagic, sizeof(kPostingsMagic));
    put_u64(post_buf, postings_.size());
    for (const auto& [qid, list] : postings_) {
        put_string(post_buf, qid);
        put_varint(post_buf, list.size());
        // Entries stored ascending by chunk id so ids delta-encode.
        std::vector<const PostingsEntry*> by_chunk;
        for (const auto& e : list) by_chunk.push_back(&e);
        std::sort(by_chunk.begin(), by_chunk.end(),
                  [](const PostingsEntry* a, const PostingsEntry* b) {
                      return a->chunk_id < b->chunk_id;
                  });
        uint64_t prev = 0;
        for (const PostingsEntry* e : by_chunk) {
            put_varint(post_buf, e->chunk_id - prev);
            prev = e->chunk_id;
            put_f32(post_buf, e->rank_score);
            put_varint(post_buf, e->mentions.size());
            for (const auto& pm : e->mentions) {
                put_varint(post_buf, pm.mention_index);
                put_scores(post_buf, pm.scores);
            }
        }
    }
    io::atomic_write(dir / "postings.bin", post_buf);

    json manifest;
    manifest["format_version"] = 1;
    manifest["corpus_hash"] = corpus_hash_;
    manifest["num_chunks"] = chunks_.size();
    manifest["num_entities"] = postings_.size();
    manifest["thresholds"] = {{"h", defaults_.h.value_or(1.0f)},
                              {"el", defaults_.el.value_or(0.6f)},
                              {"c", defaults_.c.value_or(0.6f)},
                              {"cc", defaults_.cc.value_or(0.6f)}};
    manifest["weights"] = {{"h", weights_.h}, {"el", weights_.el}, {"c", weights_.c}, {"cc", weights_.cc}};
    manifest["has_entities"] = !entities_.empty();
    manifest["has_steps"] = !steps_.empty();
    io::atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");

    if (!entities_.empty()) io::write_entities(dir / "entities.tsv", entities_);
    if (!steps_.empty()) {
        std::vector<io::StepRow> rows;
        for (const auto& r : steps_.rows()) rows.push_back({r.chunk_id, r.epoch, r.step});
        io::write_steps(dir / "steps.tsv", rows);
    }
}

EntityIndex EntityIndex::load(const std::filesystem::path& dir) {
    std::string manifest_text = read_binary_file(dir / "manifest.json");
    json manifest = json::parse(manifest_text);

    EntityIndex idx;
    idx.weights_.h = manifest.at("weights").at("h").get<float>();
    idx.weights_.el = manifest.at("weights").at("el").get<float>();
    idx.weights_.c = manifest.at("weights").at("c").get<float>();
    idx.weights_.cc = manifest.at("weights").at("cc").get<float>();
    idx.defaults_.h = manifest.at("thresholds").at("h").get<float>();
    idx.defaults_.el = manifest.at("thresholds").at("el").get<float>();
    idx.defaults_.c = manifest.at("thresholds").at("c").get<float>();
    idx.defaults_.cc = manifest.at("thresholds").at("cc").get<float>();

    std::string chunks_buf = read_binary_file(dir / "chunks.bin");
    if (chunks_buf.compare(0, sizeof(kChunksMagic), kChunksMagic, sizeof(kChunksMagic)) != 0)
        throw std::runtime_error("bad chunks.bin magic");
    Reader r{chunks_buf, sizeof(kChunksMagic)};
    uint64_t n = r.u64();
    r.pos += n * 8;  // offset table; records are read sequentially
    uint64_t hash = 1469598103934665603ull;
    idx.chunks_.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
        size_t record_start = r.pos;
        idx.chunks_.push_back(read_chunk(r));
        hash = fnv1a(chunks_buf.substr(record_start, r.pos - record_start), hash);
        const Chunk& c = idx.chunks_.back();
        if (!idx.by_id_.emplace(c.chunk_id, i).second)
            throw std::runtime_error("duplicate chunk id " + std::to_string(c.chunk_id));
        idx.folded_texts_.push_back(utf8::ascii_fold(c.text));
    }
    idx.corpus_hash_ = hex64(hash);
    if (idx.corpus_hash_ != manifest.at("corpus_hash").get<std::string>())
        throw std::runtime_error("corpus hash mismatch; index directory is corrupt");

    std::string post_buf = read_binary_file(dir / "postings.bin");
    if (post_buf.compare(0, sizeof(kPostingsMagic), kPostingsMagic, sizeof(kPostingsMagic)) != 0)
        throw std::runtime_error("bad postings.bin magic");
    Reader pr{post_buf, sizeof(kPostingsMagic)};
    uint64_t num_qids = pr.u64();
    for (uint64_t q = 0; q < num_qids; ++q) {
        std::string qid = pr.str();
        uint64_t entries = pr.varint();
        auto& list = idx.postings_[qid];
        list.reserve(entries);
        uint64_t prev = 0;
        for (uint64_t e = 0; e < entries; ++e) {
            PostingsEntry entry;
            prev += pr.varint();
            entry.chunk_id = prev;
            entry.rank_score = pr.f32();
            uint64_t nm = pr.varint();
            entry.mentions.resize(nm);
            for (auto& pm : entry.mentions) {
                pm.mention_index = static_cast<uint32_t>(pr.varint());
                pm.scores = read_scores(pr);
            }
            list.push_back(std::move(entry));
        }
        std::stable_sort(list.begin(), list.end(),
                         [](const PostingsEntry& a, const PostingsEntry& b) {
                             if (a.rank_score != b.rank_score) return a.rank_score > b.rank_score;
                             return a.chunk_id < b.chunk_id;
                         });
    }

    if (manifest.value("has_entities", false))
        idx.entities_ = io::read_entities(dir / "entities.tsv");
    if (manifest.value("has_steps", false)) {
        std::vector<chunking::StepAssignment> rows;
        for (const auto& row : io::read_steps(dir / "steps.tsv"))
            rows.push_back({row.chunk_id, row.epoch, row.step});
        idx.steps_ = chunking::StepsMap(rows);
    }
    return idx;
}

} // namespace entmark::index
