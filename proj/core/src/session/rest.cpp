#include "shine/session/rest.hpp"

#include "shine/log/export.hpp"
#include "shine/scenario/parser.hpp"

#include <sodium.h>

#include <cstdlib>
#include <regex>

namespace shine::session {

using nlohmann::json;

RestOptions rest_options_from_env() {
  RestOptions o;
  if (const char* t = std::getenv("SHINE_RESEARCH_TOKEN"); t && *t) o.researchToken = t;
  return o;
}

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && hex_digit(s[i + 1]) >= 0 && hex_digit(s[i + 2]) >= 0) {
      out += static_cast<char>(hex_digit(s[i + 1]) * 16 + hex_digit(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

int status_for(SessionError::Kind k) {
  switch (k) {
    case SessionError::Kind::not_found: return 404;
    case SessionError::Kind::bad_request: return 400;
    case SessionError::Kind::conflict: return 409;
  }
  return 500;
}

std::string_view code_for(SessionError::Kind k) {
  switch (k) {
    case SessionError::Kind::not_found: return "not_found";
    case SessionError::Kind::bad_request: return "bad_request";
    case SessionError::Kind::conflict: return "conflict";
  }
  return "internal";
}

bool bearer_matches(const HttpRequest& req, const std::string& expected) {
  auto it = req.headers.find("authorization");
  if (it == req.headers.end()) return false;
  static constexpr std::string_view kPrefix = "Bearer ";
  const std::string& h = it->second;
  if (h.size() != kPrefix.size() + expected.size() || h.compare(0, kPrefix.size(), kPrefix) != 0) return false;
  return sodium_memcmp(h.data() + kPrefix.size(), expected.data(), expected.size()) == 0;
}

HttpResponse create_session(SessionManager& manager, const HttpRequest& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) return error_response(400, "bad_request", "body must be a JSON object");
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (it.key() != "scenarioId" && it.key() != "participantId" && it.key() != "context") {
      return error_response(400, "bad_request", "unknown field '" + it.key() + "'");
    }
  }
  auto str = [&](const char* key) -> std::optional<std::string> {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
  };
  auto scenarioId = str("scenarioId");
  auto participantId = str("participantId");
  if (!scenarioId) return error_response(400, "bad_request", "scenarioId must be a string");
  if (!participantId) return error_response(400, "bad_request", "participantId must be a string");
  std::string context;
  if (body.contains("context") && !body["context"].is_null()) {
    if (!body["context"].is_string()) return error_response(400, "bad_request", "context must be a base64url string");
    context = body["context"].get<std::string>();
  }
  auto created = manager.create(*scenarioId, *participantId, context);
  return json_response(201, {{"sessionId", created.sessionId}, {"wsUrl", created.wsUrl}, {"token", created.token}});
}

}  // namespace

std::pair<std::string, std::map<std::string, std::string>> split_target(std::string_view target) {
  std::map<std::string, std::string> query;
  auto q = target.find('?');
  std::string path(target.substr(0, q));
  if (q != std::string_view::npos) {
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
      auto amp = rest.find('&');
      std::string_view pair = rest.substr(0, amp);
      auto eq = pair.find('=');
      std::string key = percent_decode(pair.substr(0, eq));
      std::string value = eq == std::string_view::npos ? "" : percent_decode(pair.substr(eq + 1));
      if (!key.empty()) query[key] = value;
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
  }
  return {path, query};
}

HttpResponse handle_rest(SessionManager& manager, const HttpRequest& req, const RestOptions& options) {
  static const std::regex kScenario(R"(/api/scenarios/([A-Za-z0-9_.\-]+))");
  static const std::regex kSessionOp(R"(/api/sessions/([A-Za-z0-9_\-]+)/(state|complete|events))");

  auto [path, query] = split_target(req.target);
  const std::string& m = req.method;
  std::smatch match;
  try {
    if (path == "/healthz") {
      if (m != "GET") return error_response(405, "method_not_allowed", "use GET");
      return json_response(200, {{"status", "ok"}});
    }
    if (path == "/api/scenarios") {
      if (m != "GET") return error_response(405, "method_not_allowed", "use GET");
      json list = json::array();
      for (const auto& id : manager.scenario_ids()) {
        list.push_back({{"id", id}, {"name", manager.scenario(id)->spec().name}});
      }
      return json_response(200, list);
    }
    if (std::regex_match(path, match, kScenario)) {
      if (m != "GET") return error_response(405, "method_not_allowed", "use GET");
      auto sc = manager.scenario(match[1]);
      if (!sc) return error_response(404, "not_found", "unknown scenario '" + match[1].str() + "'");
      return json_response(200, serialize_scenario(sc->spec()));
    }
    if (path == "/api/sessions") {
      if (m != "POST") return error_response(405, "method_not_allowed", "use POST");
      return create_session(manager, req);
    }
    if (std::regex_match(path, match, kSessionOp)) {
      const std::string id = match[1];
      const std::string op = match[2];
      if (op == "state") {
        if (m != "GET") return error_response(405, "method_not_allowed", "use GET");
        return json_response(200, manager.get(id)->state());
      }
      if (op == "complete") {
        if (m != "POST") return error_response(405, "method_not_allowed", "use POST");
        return json_response(200, manager.get(id)->complete());
      }
      if (m != "GET") return error_response(405, "method_not_allowed", "use GET");
      if (!options.researchToken) {
        return error_response(403, "export_disabled", "log export needs SHINE_RESEARCH_TOKEN on the server");
      }
      if (!bearer_matches(req, *options.researchToken)) {
        return error_response(401, "unauthorized", "missing or wrong bearer token");
      }
      auto fmt = log::export_format_from_string(query.count("format") ? query["format"] : "jsonl");
      if (!fmt) return error_response(400, "bad_request", "format must be jsonl or csv");
      try {
        return {200, std::string(log::content_type(*fmt)), log::export_session(manager.storage(), id, *fmt)};
      } catch (const log::UnknownSession&) {
        return error_response(404, "not_found", "unknown session '" + id + "'");
      }
    }
    return error_response(404, "not_found", "no route for " + path);
  } catch (const SessionError& e) {
    return error_response(status_for(e.kind()), code_for(e.kind()), e.what());
  } catch (const log::StorageError& e) {
    return error_response(503, "storage_unavailable", e.what());
  }
}

}  // namespace shine::session
