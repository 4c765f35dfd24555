// WebSocket transport for external explanation engines: connect, send one
// text frame, read one text frame, close. The whole exchange runs on a
// private io_context bounded by the timeout.

#include "shine/explain/engine_client.hpp"
#include "shine/net/url.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace shine::explain {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct Exchange {
  explicit Exchange(asio::io_context& ioc) : resolver(ioc), ws(ioc) {}

  tcp::resolver resolver;
  websocket::stream<beast::tcp_stream> ws;
  beast::flat_buffer buffer;
  std::string out;
  bool done = false;
  beast::error_code error;
  std::string stage;
};

class WebSocketClient : public EngineClient {
 public:
  explicit WebSocketClient(std::string url) : url_(std::move(url)) {}

  EngineReply exchange(const nlohmann::json& request, std::chrono::milliseconds timeout) override {
    using clock = std::chrono::steady_clock;
    EngineReply r;
    auto url = net::parse_url(url_);
    if (!url || url->scheme != "ws") {
      r.status = EngineReply::Status::transport_error;
      r.detail = "unsupported engine URL " + url_;
      return r;
    }

    asio::io_context ioc;
    auto x = std::make_shared<Exchange>(ioc);
    x->out = request.dump();
    auto fail = [x](const char* stage, beast::error_code ec) {
      x->stage = stage;
      x->error = ec;
      x->done = true;
    };
    const std::string host = url->host;
    const std::string target = url->target;

    x->resolver.async_resolve(host, std::to_string(url->port), [x, fail, host, target](beast::error_code ec,
                                                                                        tcp::resolver::results_type res) {
      if (ec) return fail("resolve", ec);
      beast::get_lowest_layer(x->ws).async_connect(res, [x, fail, host, target](beast::error_code ec,
                                                                                 const tcp::endpoint&) {
        if (ec) return fail("connect", ec);
        x->ws.async_handshake(host, target, [x, fail](beast::error_code ec) {
          if (ec) return fail("handshake", ec);
          x->ws.text(true);
          x->ws.async_write(asio::buffer(x->out), [x, fail](beast::error_code ec, std::size_t) {
            if (ec) return fail("write", ec);
            x->ws.async_read(x->buffer, [x, fail](beast::error_code ec, std::size_t) {
              if (ec) return fail("read", ec);
              x->done = true;
            });
          });
        });
      });
    });

    auto start = clock::now();
    ioc.run_for(timeout);
    r.latencyMs = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count();

    if (!x->done) {
      // Abort outstanding operations and let their handlers drain before the
      // io_context goes away.
      x->resolver.cancel();
      beast::error_code ignored;
      beast::get_lowest_layer(x->ws).socket().close(ignored);
      ioc.restart();
      ioc.run();
      r.status = EngineReply::Status::timeout;
      r.detail = "no response within " + std::to_string(timeout.count()) + " ms";
      return r;
    }
    if (x->error) {
      r.status = EngineReply::Status::transport_error;
      r.detail = x->stage + ": " + x->error.message();
      return r;
    }
    std::string body = beast::buffers_to_string(x->buffer.data());
    beast::error_code ignored;
    beast::get_lowest_layer(x->ws).socket().close(ignored);
    EngineReply parsed = parse_engine_response(body);
    parsed.latencyMs = r.latencyMs;
    return parsed;
  }

 private:
  std::string url_;
};

}  // namespace

std::unique_ptr<EngineClient> make_websocket_client(const std::string& url) {
  return std::make_unique<WebSocketClient>(url);
}

}  // namespace shine::explain
