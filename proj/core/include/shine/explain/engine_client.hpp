#pragma once

#include "shine/scenario/spec.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace shine::explain {

struct EngineReply {
  enum class Status { ok, timeout, transport_error, invalid_response };
  Status status = Status::ok;
  std::string text;
  std::vector<std::string> followUpHints;
  std::string detail;         // error description for anything but ok
  std::int64_t latencyMs = 0; // as measured by the client (declared, for mocks)
};

std::string_view to_string(EngineReply::Status s);

/// One request/response exchange with an external explanation engine.
/// Implementations must return within roughly `timeout`; they never throw.
class EngineClient {
 public:
  virtual ~EngineClient() = default;
  virtual EngineReply exchange(const nlohmann::json& request, std::chrono::milliseconds timeout) = 0;
};

/// Parses `{text, followUpHints?}`. A missing or empty text is invalid.
EngineReply parse_engine_response(std::string_view body);

/// JSON over HTTP POST to the endpoint URL.
std::unique_ptr<EngineClient> make_rest_client(const std::string& url);
/// One text frame out, one text frame back, per exchange.
std::unique_ptr<EngineClient> make_websocket_client(const std::string& url);
/// Picks the transport named in the endpoint.
std::unique_ptr<EngineClient> make_engine_client(const EngineEndpoint& endpoint);

/// In-process engine with a declared latency instead of a real delay: an
/// exchange whose latency exceeds the timeout reports a timeout without
/// sleeping, which keeps fallback tests deterministic.
class MockEngine : public EngineClient {
 public:
  using Responder = std::function<nlohmann::json(const nlohmann::json& request)>;

  MockEngine(Responder responder, std::chrono::milliseconds latency)
      : responder_(std::move(responder)), latency_(latency) {}

  EngineReply exchange(const nlohmann::json& request, std::chrono::milliseconds timeout) override;

  const std::vector<nlohmann::json>& requests() const { return requests_; }

 private:
  Responder responder_;
  std::chrono::milliseconds latency_;
  std::vector<nlohmann::json> requests_;
};

}  // namespace shine::explain
