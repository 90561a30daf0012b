#include "entmark/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

using nlohmann::json;

namespace entmark::io {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Applies fn to every non-empty line.
void for_each_line(const std::string& content, const std::function<void(std::string_view)>& fn) {
    size_t pos = 0;
    while (pos < content.size()) {
        size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) nl = content.size();
        std::string_view line(content.data() + pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) fn(line);
        pos = nl + 1;
    }
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            out.emplace_back(s.substr(pos));
            break;
        }
        out.emplace_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

json opt_to_json(const std::optional<float>& v) {
    if (!v) return nullptr;
    return *v;
}

std::optional<float> opt_from_json(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<float>();
}

json candidate_to_json(const CandidateScore& c) {
    json j;
    j["qid"] = c.qid;
    j["h"] = opt_to_json(c.h);
    j["el"] = opt_to_json(c.el);
    j["c"] = opt_to_json(c.c);
    j["cc"] = opt_to_json(c.cc);
    return j;
}

CandidateScore candidate_from_json(const json& j) {
    CandidateScore c;
    c.qid = j.at("qid").get<std::string>();
    c.h = opt_from_json(j, "h");
    c.el = opt_from_json(j, "el");
    c.c = opt_from_json(j, "c");
    c.cc = opt_from_json(j, "cc");
    if (c.h) c.sources |= kSourceHyperlink;
    if (c.el) c.sources |= kSourceEntityLinking;
    if (c.c || c.cc) c.sources |= kSourceCoref;
    return c;
}

} // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
    std::vector<Document> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        json j = json::parse(line);
        out.push_back({j.at("doc_id").get<std::string>(), j.at("text").get<std::string>(),
                       j.value("title", std::string{})});
    });
    return out;
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs) {
    std::string buf;
    for (const auto& d : docs) {
        json j;
        j["doc_id"] = d.doc_id;
        j["title"] = d.source_title;
        j["text"] = d.text;
        buf += j.dump();
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::vector<RawDocument> read_raw_documents(const std::filesystem::path& path) {
    std::vector<RawDocument> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        json j = json::parse(line);
        out.push_back({j.at("doc_id").get<std::string>(), j.value("title", std::string{}),
                       j.at("markup").get<std::string>()});
    });
    return out;
}

void write_raw_documents(const std::filesystem::path& path, const std::vector<RawDocument>& docs) {
    std::string buf;
    for (const auto& d : docs) {
        json j;
        j["doc_id"] = d.doc_id;
        j["title"] = d.title;
        j["markup"] = d.markup;
        buf += j.dump();
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::vector<RawMention> read_raw_mentions(const std::filesystem::path& path) {
    std::vector<RawMention> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        json j = json::parse(line);
        RawMention m;
        m.doc_id = j.at("doc_id").get<std::string>();
        m.start = j.at("start").get<int64_t>();
        m.end = j.at("end").get<int64_t>();
        auto src = j.at("source").get<std::string>();
        if (src == "H")
            m.source = RawMention::Kind::Hyperlink;
        else if (src == "EL")
            m.source = RawMention::Kind::EntityLinking;
        else if (src == "COREF")
            m.source = RawMention::Kind::Coref;
        else
            throw std::runtime_error("unknown mention source: " + src);
        if (j.contains("qid") && !j.at("qid").is_null()) m.qid = j.at("qid").get<std::string>();
        m.score = opt_from_json(j, "score");
        if (j.contains("cluster_id") && !j.at("cluster_id").is_null())
            m.cluster_id = j.at("cluster_id").get<std::string>();
        out.push_back(std::move(m));
    });
    return out;
}

void write_raw_mentions(const std::filesystem::path& path, const std::vector<RawMention>& rows) {
    std::string buf;
    for (const auto& m : rows) {
        json j;
        j["doc_id"] = m.doc_id;
        j["start"] = m.start;
        j["end"] = m.end;
        switch (m.source) {
            case RawMention::Kind::Hyperlink: j["source"] = "H"; break;
            case RawMention::Kind::EntityLinking: j["source"] = "EL"; break;
            case RawMention::Kind::Coref: j["source"] = "COREF"; break;
        }
        j["qid"] = m.qid ? json(*m.qid) : json(nullptr);
        j["score"] = opt_to_json(m.score);
        j["cluster_id"] = m.cluster_id ? json(*m.cluster_id) : json(nullptr);
        buf += j.dump();
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::vector<DocMention> read_scored_mentions(const std::filesystem::path& path) {
    std::vector<DocMention> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        json j = json::parse(line);
        DocMention dm;
        dm.doc_id = j.at("doc_id").get<std::string>();
        dm.mention.span.start = j.at("start").get<int64_t>();
        dm.mention.span.end = j.at("end").get<int64_t>();
        if (j.contains("surface")) dm.mention.span.surface = j.at("surface").get<std::string>();
        for (const auto& cj : j.at("candidates"))
            dm.mention.candidates.push_back(candidate_from_json(cj));
        if (j.contains("cluster_id") && !j.at("cluster_id").is_null())
            dm.mention.cluster_id = j.at("cluster_id").get<std::string>();
        out.push_back(std::move(dm));
    });
    return out;
}

void write_scored_mentions(const std::filesystem::path& path, const std::vector<DocMention>& rows) {
    std::string buf;
    for (const auto& dm : rows) {
        json j;
        j["doc_id"] = dm.doc_id;
        j["start"] = dm.mention.span.start;
        j["end"] = dm.mention.span.end;
        if (!dm.mention.span.surface.empty()) j["surface"] = dm.mention.span.surface;
        json cands = json::array();
        for (const auto& c : dm.mention.candidates) cands.push_back(candidate_to_json(c));
        j["candidates"] = std::move(cands);
        j["cluster_id"] = dm.mention.cluster_id ? json(*dm.mention.cluster_id) : json(nullptr);
        buf += j.dump();
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::vector<Chunk> read_chunks(const std::filesystem::path& path) {
    std::vector<Chunk> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        json j = json::parse(line);
        Chunk c;
        c.chunk_id = j.at("chunk_id").get<uint64_t>();
        c.doc_id = j.at("doc_id").get<std::string>();
        c.token_ids = j.at("token_ids").get<std::vector<int64_t>>();
        c.content_len = j.at("content_len").get<int32_t>();
        c.text = j.at("text").get<std::string>();
        for (const auto& mj : j.at("mentions")) {
            ChunkMention m;
            m.tok_start = mj.at("start").get<int32_t>();
            m.tok_end = mj.at("end").get<int32_t>();
            m.char_start = mj.at("char_start").get<int64_t>();
            m.char_end = mj.at("char_end").get<int64_t>();
            for (const auto& cj : mj.at("candidates"))
                m.candidates.push_back(candidate_from_json(cj));
            if (mj.contains("cluster_id") && !mj.at("cluster_id").is_null())
                m.cluster_id = mj.at("cluster_id").get<std::string>();
            c.mentions.push_back(std::move(m));
        }
        out.push_back(std::move(c));
    });
    return out;
}

void write_chunks(const std::filesystem::path& path, const std::vector<Chunk>& chunks) {
    std::string buf;
    for (const auto& c : chunks) {
        json j;
        j["chunk_id"] = c.chunk_id;
        j["doc_id"] = c.doc_id;
        j["token_ids"] = c.token_ids;
        j["content_len"] = c.content_len;
        json ms = json::array();
        for (const auto& m : c.mentions) {
            json mj;
            mj["start"] = m.tok_start;
            mj["end"] = m.tok_end;
            mj["char_start"] = m.char_start;
            mj["char_end"] = m.char_end;
            json cands = json::array();
            for (const auto& cand : m.candidates) cands.push_back(candidate_to_json(cand));
            mj["candidates"] = std::move(cands);
            mj["cluster_id"] = m.cluster_id ? json(*m.cluster_id) : json(nullptr);
            ms.push_back(std::move(mj));
        }
        j["mentions"] = std::move(ms);
        j["text"] = c.text;
        buf += j.dump();
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::vector<AnswerRow> read_answers(const std::filesystem::path& path) {
    std::vector<AnswerRow> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        json j = json::parse(line);
        out.push_back({j.at("step").get<int64_t>(), j.at("question_id").get<std::string>(),
                       j.at("correct").get<bool>()});
    });
    return out;
}

void write_answers(const std::filesystem::path& path, const std::vector<AnswerRow>& rows) {
    std::string buf;
    for (const auto& r : rows) {
        json j;
        j["step"] = r.step;
        j["question_id"] = r.question_id;
        j["correct"] = r.correct;
        buf += j.dump();
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::vector<JudgmentRow> read_judgments(const std::filesystem::path& path) {
    std::vector<JudgmentRow> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        json j = json::parse(line);
        out.push_back({j.at("qid").get<std::string>(), j.at("chunk_id").get<uint64_t>(),
                       j.at("window_index").get<int32_t>(),
                       j.at("verdict").get<std::string>() == "Y"});
    });
    return out;
}

void write_judgments(const std::filesystem::path& path, const std::vector<JudgmentRow>& rows) {
    std::string buf;
    for (const auto& r : rows) {
        json j;
        j["qid"] = r.qid;
        j["chunk_id"] = r.chunk_id;
        j["window_index"] = r.window_index;
        j["verdict"] = r.yes ? "Y" : "N";
        buf += j.dump();
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::map<std::string, EntityRef> read_entities(const std::filesystem::path& path) {
    std::map<std::string, EntityRef> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        auto cols = split(line, '\t');
        if (cols.size() < 2) throw std::runtime_error("bad entities.tsv row: " + std::string(line));
        EntityRef e;
        e.qid = cols[0];
        e.canonical_name = cols[1];
        if (cols.size() > 2 && !cols[2].empty()) {
            for (auto& alias : split(cols[2], '|'))
                if (!alias.empty()) e.aliases.push_back(std::move(alias));
        }
        out.emplace(e.qid, std::move(e));
    });
    return out;
}

void write_entities(const std::filesystem::path& path, const std::map<std::string, EntityRef>& entities) {
    std::string buf;
    for (const auto& [qid, e] : entities) {
        buf += qid;
        buf += '\t';
        buf += e.canonical_name;
        buf += '\t';
        for (size_t i = 0; i < e.aliases.size(); ++i) {
            if (i) buf += '|';
            buf += e.aliases[i];
        }
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::map<std::string, std::string> read_title_qid(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        auto cols = split(line, '\t');
        if (cols.size() != 2) throw std::runtime_error("bad title_qid.tsv row: " + std::string(line));
        out.emplace(std::move(cols[0]), std::move(cols[1]));
    });
    return out;
}

void write_title_qid(const std::filesystem::path& path, const std::map<std::string, std::string>& rows) {
    std::string buf;
    for (const auto& [title, qid] : rows) {
        buf += title;
        buf += '\t';
        buf += qid;
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::vector<StepRow> read_steps(const std::filesystem::path& path) {
    std::vector<StepRow> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        auto cols = split(line, '\t');
        if (cols.size() != 3) throw std::runtime_error("bad steps.tsv row: " + std::string(line));
        out.push_back({std::stoull(cols[0]), std::stoi(cols[1]), std::stoi(cols[2])});
    });
    return out;
}

void write_steps(const std::filesystem::path& path, const std::vector<StepRow>& rows) {
    std::string buf;
    for (const auto& r : rows) {
        buf += std::to_string(r.chunk_id);
        buf += '\t';
        buf += std::to_string(r.epoch);
        buf += '\t';
        buf += std::to_string(r.step);
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::map<std::string, std::string> read_descriptions(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        auto tab = line.find('\t');
        if (tab == std::string_view::npos)
            throw std::runtime_error("bad descriptions.tsv row: " + std::string(line));
        out.emplace(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
    });
    return out;
}

void write_descriptions(const std::filesystem::path& path, const std::map<std::string, std::string>& rows) {
    std::string buf;
    for (const auto& [qid, desc] : rows) {
        buf += qid;
        buf += '\t';
        buf += desc;
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::vector<FactRow> read_facts(const std::filesystem::path& path) {
    std::vector<FactRow> out;
    for_each_line(read_file(path), [&](std::string_view line) {
        auto cols = split(line, '\t');
        if (cols.size() != 3) throw std::runtime_error("bad facts.tsv row: " + std::string(line));
        out.push_back({std::move(cols[0]), std::move(cols[1]), std::move(cols[2])});
    });
    return out;
}

void write_facts(const std::filesystem::path& path, const std::vector<FactRow>& rows) {
    std::string buf;
    for (const auto& r : rows) {
        buf += r.question_id;
        buf += '\t';
        buf += r.subject_qid;
        buf += '\t';
        buf += r.answer_qid;
        buf += '\n';
    }
    atomic_write(path, buf);
}

std::map<std::string, std::vector<Mention>> group_mentions(const std::vector<DocMention>& rows) {
    std::map<std::string, std::vector<Mention>> out;
    for (const auto& dm : rows) out[dm.doc_id].push_back(dm.mention);
    return out;
}

} // namespace entmark::io
