#pragma once
// Read-only HTTP search service over a committed index. Stateless per
// request; the index is immutable, so handlers share it without locking.

#include "entmark/index.hpp"

#include <json.hpp>

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace entmark::service {

// Shared result shapes, used by both the HTTP handlers and the CLI so the
// two surfaces stay byte-identical.
nlohmann::json hit_to_json(const index::Hit& hit);
nlohmann::json query_result_to_json(const index::QueryResult& result);
nlohmann::json string_hit_to_json(const index::StringHit& hit);
nlohmann::json chunk_to_json(const Chunk& chunk);

constexpr size_t kDefaultLimit = 20;
constexpr size_t kMaxLimit = 1000;

class SearchService {
public:
    explicit SearchService(const index::EntityIndex& idx) : index_(idx) {}

    void register_routes(httplib::Server& server) const;

private:
    const index::EntityIndex& index_;
};

// Blocking; binds host:port and serves until the process exits.
int serve(const index::EntityIndex& idx, const std::string& host, int port);

} // namespace entmark::service
