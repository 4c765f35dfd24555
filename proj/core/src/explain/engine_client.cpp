#include "shine/explain/engine_client.hpp"

#include <stdexcept>

namespace shine::explain {

using nlohmann::json;

std::string_view to_string(EngineReply::Status s) {
  switch (s) {
    case EngineReply::Status::ok: return "ok";
    case EngineReply::Status::timeout: return "timeout";
    case EngineReply::Status::transport_error: return "transportError";
    case EngineReply::Status::invalid_response: return "invalidResponse";
  }
  return "?";
}

EngineReply parse_engine_response(std::string_view body) {
  EngineReply r;
  json j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    r.status = EngineReply::Status::invalid_response;
    r.detail = "response is not a JSON object";
    return r;
  }
  auto text = j.find("text");
  if (text == j.end() || !text->is_string() || text->get_ref<const std::string&>().empty()) {
    r.status = EngineReply::Status::invalid_response;
    r.detail = "missing or empty text";
    return r;
  }
  r.text = text->get<std::string>();
  if (auto hints = j.find("followUpHints"); hints != j.end() && hints->is_array()) {
    for (const auto& h : *hints) {
      if (h.is_string()) r.followUpHints.push_back(h.get<std::string>());
    }
  }
  return r;
}

EngineReply MockEngine::exchange(const json& request, std::chrono::milliseconds timeout) {
  requests_.push_back(request);
  EngineReply r;
  r.latencyMs = latency_.count();
  if (latency_ > timeout) {
    r.status = EngineReply::Status::timeout;
    r.detail = "no response within " + std::to_string(timeout.count()) + " ms";
    return r;
  }
  json body;
  try {
    body = responder_(request);
  } catch (const std::exception& e) {
    r.status = EngineReply::Status::transport_error;
    r.detail = e.what();
    return r;
  }
  EngineReply parsed = parse_engine_response(body.dump());
  parsed.latencyMs = r.latencyMs;
  return parsed;
}

std::unique_ptr<EngineClient> make_engine_client(const EngineEndpoint& endpoint) {
  switch (endpoint.transport) {
    case EngineTransport::rest: return make_rest_client(endpoint.url);
    case EngineTransport::websocket: return make_websocket_client(endpoint.url);
  }
  throw std::invalid_argument("unknown engine transport");
}

}  // namespace shine::explain
