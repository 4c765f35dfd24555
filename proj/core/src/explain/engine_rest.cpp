// REST transport for external explanation engines, on cpp-httplib.

#include "shine/explain/engine_client.hpp"
#include "shine/net/url.hpp"

#include <httplib.h>

namespace shine::explain {
namespace {

class RestClient : public EngineClient {
 public:
  explicit RestClient(std::string url) : url_(std::move(url)) {}

  EngineReply exchange(const nlohmann::json& request, std::chrono::milliseconds timeout) override {
    using clock = std::chrono::steady_clock;
    EngineReply r;
    auto url = net::parse_url(url_);
    if (!url || url->secure() || url->scheme != "http") {
      r.status = EngineReply::Status::transport_error;
      r.detail = "unsupported engine URL " + url_;
      return r;
    }
    httplib::Client client(url->host, url->port);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_keep_alive(false);

    auto start = clock::now();
    auto res = client.Post(url->target, request.dump(), "application/json");
    r.latencyMs = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count();
    if (!res) {
      bool timed_out = res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read ||
                       r.latencyMs >= timeout.count();
      r.status = timed_out ? EngineReply::Status::timeout : EngineReply::Status::transport_error;
      r.detail = httplib::to_string(res.error());
      return r;
    }
    if (r.latencyMs > timeout.count()) {
      r.status = EngineReply::Status::timeout;
      r.detail = "response after " + std::to_string(r.latencyMs) + " ms";
      return r;
    }
    if (res->status / 100 != 2) {
      r.status = EngineReply::Status::transport_error;
      r.detail = "HTTP " + std::to_string(res->status);
      return r;
    }
    EngineReply parsed = parse_engine_response(res->body);
    parsed.latencyMs = r.latencyMs;
    return parsed;
  }

 private:
  std::string url_;
};

}  // namespace

std::unique_ptr<EngineClient> make_rest_client(const std::string& url) { return std::make_unique<RestClient>(url); }

}  // namespace shine::explain
