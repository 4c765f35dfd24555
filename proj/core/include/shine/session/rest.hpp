#pragma once

#include "shine/session/manager.hpp"

#include <map>
#include <optional>
#include <string>

namespace shine::session {

struct HttpRequest {
  std::string method;
  std::string target;  // path plus query string
  std::string body;
  std::map<std::string, std::string> headers;  // lower-case names
};

struct HttpResponse {
  int status = 200;
  std::string contentType = "application/json";
  std::string body;
};

struct RestOptions {
  /// Bearer token guarding log export; export is refused when unset.
  std::optional<std::string> researchToken;
};

/// Reads SHINE_RESEARCH_TOKEN.
RestOptions rest_options_from_env();

/// Transport-independent REST routing:
///   GET  /healthz
///   GET  /api/scenarios, /api/scenarios/{id}
///   POST /api/sessions                      {scenarioId, participantId, context?}
///   GET  /api/sessions/{id}/state
///   POST /api/sessions/{id}/complete
///   GET  /api/sessions/{id}/events?format=jsonl|csv   (Authorization: Bearer)
/// Errors are {"error": {"code", "message"}}.
HttpResponse handle_rest(SessionManager& manager, const HttpRequest& request, const RestOptions& options);

/// Splits "/a/b?x=1&y=%20" into path and decoded query parameters.
std::pair<std::string, std::map<std::string, std::string>> split_target(std::string_view target);

}  // namespace shine::session
