#include "entmark/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cstdio>

using nlohmann::json;

namespace entmark::service {

namespace {

json scores_to_json(const index::MentionScores& s) {
    json j;
    j["h"] = s.h ? json(*s.h) : json(nullptr);
    j["el"] = s.el ? json(*s.el) : json(nullptr);
    j["c"] = s.c ? json(*s.c) : json(nullptr);
    j["cc"] = s.cc ? json(*s.cc) : json(nullptr);
    return j;
}

struct ParamError {
    std::string message;
};

std::optional<uint64_t> parse_u64(const std::string& s) {
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<float> parse_f32(const std::string& s) {
    try {
        size_t used = 0;
        float v = std::stof(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    json j;
    j["error"] = message;
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& j) {
    res.set_content(j.dump(), "application/json");
}

// Threshold params: any of h/el/c/cc; defaults apply when none given.
index::Thresholds thresholds_from_params(const httplib::Request& req,
                                         const index::Thresholds& defaults) {
    index::Thresholds t;
    bool any = false;
    for (auto [name, slot] : std::initializer_list<std::pair<const char*, std::optional<float>*>>{
             {"h", &t.h}, {"el", &t.el}, {"c", &t.c}, {"cc", &t.cc}}) {
        if (!req.has_param(name)) continue;
        auto v = parse_f32(req.get_param_value(name));
        if (!v) throw ParamError{std::string("malformed parameter: ") + name};
        *slot = *v;
        any = true;
    }
    if (!any) return defaults;
    if (t.h && *t.h != 1.0f) throw ParamError{"h threshold must be 1 when set"};
    return t;
}

size_t parse_limit(const httplib::Request& req) {
    if (!req.has_param("limit")) return kDefaultLimit;
    auto v = parse_u64(req.get_param_value("limit"));
    if (!v || *v < 1) throw ParamError{"malformed parameter: limit"};
    return std::min<size_t>(*v, kMaxLimit);
}

size_t parse_offset(const httplib::Request& req) {
    if (!req.has_param("offset")) return 0;
    auto v = parse_u64(req.get_param_value("offset"));
    if (!v) throw ParamError{"malformed parameter: offset"};
    return *v;
}

} // namespace

json hit_to_json(const index::Hit& hit) {
    json j;
    j["chunk_id"] = hit.chunk_id;
    j["rank_score"] = hit.rank_score;
    json matches = json::array();
    for (const auto& m : hit.matches) {
        json mj;
        mj["start"] = m.start;
        mj["end"] = m.end;
        mj["qid"] = m.qid;
        mj["scores"] = scores_to_json(m.scores);
        matches.push_back(std::move(mj));
    }
    j["matches"] = std::move(matches);
    return j;
}

json query_result_to_json(const index::QueryResult& result) {
    json j;
    j["total"] = result.total;
    json hits = json::array();
    for (const auto& h : result.hits) hits.push_back(hit_to_json(h));
    j["hits"] = std::move(hits);
    return j;
}

json string_hit_to_json(const index::StringHit& hit) {
    json j;
    j["chunk_id"] = hit.chunk_id;
    j["match_count"] = hit.matches.size();
    json matches = json::array();
    for (const auto& [start, end] : hit.matches) {
        json mj;
        mj["start"] = start;
        mj["end"] = end;
        matches.push_back(std::move(mj));
    }
    j["matches"] = std::move(matches);
    return j;
}

json chunk_to_json(const Chunk& c) {
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
        for (const auto& cand : m.candidates) {
            json cj;
            cj["qid"] = cand.qid;
            cj["h"] = cand.h ? json(*cand.h) : json(nullptr);
            cj["el"] = cand.el ? json(*cand.el) : json(nullptr);
            cj["c"] = cand.c ? json(*cand.c) : json(nullptr);
            cj["cc"] = cand.cc ? json(*cand.cc) : json(nullptr);
            cands.push_back(std::move(cj));
        }
        mj["candidates"] = std::move(cands);
        mj["cluster_id"] = m.cluster_id ? json(*m.cluster_id) : json(nullptr);
        ms.push_back(std::move(mj));
    }
    j["mentions"] = std::move(ms);
    j["text"] = c.text;
    return j;
}

void SearchService::register_routes(httplib::Server& server) const {
    const auto& idx = index_;
    server.set_tcp_nodelay(true);  // small JSON responses; never wait on Nagle

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, json{{"status", "ok"}});
    });

    server.Get(R"(/entities/([^/]+)/chunks)",
               [&idx](const httplib::Request& req, httplib::Response& res) {
                   try {
                       index::QuerySpec spec;
                       spec.qid = req.matches[1];
                       spec.thresholds = thresholds_from_params(req, idx.default_query_thresholds());
                       spec.limit = parse_limit(req);
                       spec.offset = parse_offset(req);
                       send_json(res, query_result_to_json(idx.query_entity(spec)));
                   } catch (const ParamError& e) {
                       send_error(res, 400, e.message);
                   } catch (const std::invalid_argument& e) {
                       send_error(res, 400, e.what());
                   }
               });

    server.Get(R"(/entities/([^/]+)/steps)",
               [&idx](const httplib::Request& req, httplib::Response& res) {
                   try {
                       auto thresholds = thresholds_from_params(req, idx.default_query_thresholds());
                       auto steps = idx.steps_for_entity(req.matches[1], thresholds);
                       json j;
                       j["qid"] = std::string(req.matches[1]);
                       json rows = json::array();
                       for (const auto& [epoch, step] : steps)
                           rows.push_back(json{{"epoch", epoch}, {"step", step}});
                       j["steps"] = std::move(rows);
                       j["total"] = steps.size();
                       send_json(res, j);
                   } catch (const ParamError& e) {
                       send_error(res, 400, e.message);
                   } catch (const std::invalid_argument& e) {
                       send_error(res, 400, e.what());
                   }
               });

    server.Get(R"(/chunks/(\d+))", [&idx](const httplib::Request& req, httplib::Response& res) {
        auto id = parse_u64(req.matches[1]);
        if (!id) {
            send_error(res, 400, "malformed chunk id");
            return;
        }
        const Chunk* chunk = idx.chunk(*id);
        if (!chunk) {
            send_error(res, 404, "no such chunk");
            return;
        }
        send_json(res, chunk_to_json(*chunk));
    });

    server.Get("/cooccur", [&idx](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("a") || !req.has_param("b")) {
            send_error(res, 400, "parameters a and b are required");
            return;
        }
        try {
            auto thresholds = thresholds_from_params(req, idx.default_query_thresholds());
            std::string a = req.get_param_value("a");
            std::string b = req.get_param_value("b");
            json j;
            j["a"] = a;
            j["b"] = b;
            j["count"] = idx.cooccur_count(a, b, thresholds);
            send_json(res, j);
        } catch (const ParamError& e) {
            send_error(res, 400, e.message);
        }
    });

    server.Get("/search", [&idx](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("mode") || !req.has_param("qid")) {
            send_error(res, 400, "parameters mode and qid are required");
            return;
        }
        auto mode = index::baseline_mode_from_string(req.get_param_value("mode"));
        if (!mode) {
            send_error(res, 400, "unknown mode");
            return;
        }
        try {
            size_t limit = parse_limit(req);
            std::string qid = req.get_param_value("qid");
            auto eit = idx.entities().find(qid);
            json j;
            j["total"] = 0;
            j["hits"] = json::array();
            if (eit != idx.entities().end()) {
                auto hits = idx.query_string(*mode, eit->second, limit);
                j["total"] = hits.size();
                for (const auto& h : hits) j["hits"].push_back(string_hit_to_json(h));
            }
            send_json(res, j);
        } catch (const ParamError& e) {
            send_error(res, 400, e.message);
        }
    });
}

int serve(const index::EntityIndex& idx, const std::string& host, int port) {
    httplib::Server server;
    SearchService svc(idx);
    svc.register_routes(server);
    std::fprintf(stderr, "serving index (%zu chunks) on %s:%d\n", idx.chunks().size(),
                 host.c_str(), port);
    if (!server.listen(host, port)) {
        std::fprintf(stderr, "failed to bind %s:%d\n", host.c_str(), port);
        return 1;
    }
    return 0;
}

} // namespace entmark::service
