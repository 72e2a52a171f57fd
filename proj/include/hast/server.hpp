#pragma once

#include <string>

#include "hast/session.hpp"

namespace httplib {
class Server;
}

namespace hast {

// POST /sessions, GET /sessions/{id}/query, POST /sessions/{id}/labels,
// GET /sessions/{id}/metrics, GET /sessions/{id}/export.
// Errors are returned as {"error": message} with the ServiceError status.
void register_routes(httplib::Server& server, SessionManager& sessions);

}  // namespace hast
