// The REST and WebSocket engine clients against small local servers.

#include "fixtures.hpp"

#include "shine/explain/engine_client.hpp"
#include "shine/explain/explainer.hpp"
#include "shine/net/url.hpp"
#include "shine/sim/world.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

namespace shine::explain {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;

class RestEngine {
 public:
  explicit RestEngine(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/explain", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~RestEngine() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/explain"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// Accepts WebSocket connections one at a time and answers each frame
/// through `reply` after `delay`.
class WsEngine {
 public:
  WsEngine(std::function<std::string(const std::string&)> reply, std::chrono::milliseconds delay)
      : acceptor_(ioc_, {boost::asio::ip::make_address("127.0.0.1"), 0}), reply_(std::move(reply)), delay_(delay) {
    thread_ = std::thread([this] { serve(); });
  }
  ~WsEngine() {
    stop_ = true;
    boost::system::error_code ignored;
    // Wake a blocked accept.
    boost::asio::ip::tcp::socket poke(ioc_);
    poke.connect(acceptor_.local_endpoint(), ignored);
    thread_.join();
  }
  std::string url() const { return "ws://127.0.0.1:" + std::to_string(acceptor_.local_endpoint().port()) + "/engine"; }
  std::string last_request() const {
    std::lock_guard lock(mu_);
    return last_;
  }

 private:
  void serve() {
    namespace beast = boost::beast;
    while (!stop_) {
      boost::asio::ip::tcp::socket socket(ioc_);
      boost::system::error_code ec;
      acceptor_.accept(socket, ec);
      if (ec || stop_) return;
      beast::websocket::stream<boost::asio::ip::tcp::socket> ws(std::move(socket));
      ws.accept(ec);
      if (ec) continue;
      beast::flat_buffer buffer;
      ws.read(buffer, ec);
      if (ec) continue;
      std::string text = beast::buffers_to_string(buffer.data());
      {
        std::lock_guard lock(mu_);
        last_ = text;
      }
      std::this_thread::sleep_for(delay_);
      ws.text(true);
      ws.write(boost::asio::buffer(reply_(text)), ec);
      ws.close(beast::websocket::close_code::normal, ec);
    }
  }

  boost::asio::io_context ioc_;
  boost::asio::ip::tcp::acceptor acceptor_;
  std::function<std::string(const std::string&)> reply_;
  std::chrono::milliseconds delay_;
  std::atomic<bool> stop_{false};
  mutable std::mutex mu_;
  std::string last_;
  std::thread thread_;
};

const json kRequest = {{"sessionId", "s-1"}, {"cause", {{"type", "ruleFired"}, {"ruleId", "R3"}}}};

TEST(RestTransport, PostsTheRequestAndParsesTheReply) {
  json seen;
  RestEngine engine([&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"text":"Because rule R3 fired.","followUpHints":["Why R3?"]})", "application/json");
  });
  auto client = make_rest_client(engine.url());
  auto reply = client->exchange(kRequest, 2000ms);
  EXPECT_EQ(reply.status, EngineReply::Status::ok) << reply.detail;
  EXPECT_EQ(reply.text, "Because rule R3 fired.");
  EXPECT_EQ(reply.followUpHints, std::vector<std::string>{"Why R3?"});
  EXPECT_EQ(seen, kRequest);
  EXPECT_GE(reply.latencyMs, 0);
}

TEST(RestTransport, SlowEngineTimesOut) {
  RestEngine engine([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(600ms);
    res.set_content(R"({"text":"late"})", "application/json");
  });
  auto started = std::chrono::steady_clock::now();
  auto reply = make_rest_client(engine.url())->exchange(kRequest, 200ms);
  EXPECT_EQ(reply.status, EngineReply::Status::timeout) << reply.detail;
  EXPECT_LT(std::chrono::steady_clock::now() - started, 550ms);
}

TEST(RestTransport, HttpErrorIsATransportError) {
  RestEngine engine([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  auto reply = make_rest_client(engine.url())->exchange(kRequest, 1000ms);
  EXPECT_EQ(reply.status, EngineReply::Status::transport_error);
  EXPECT_EQ(reply.detail, "HTTP 500");
}

TEST(RestTransport, MalformedBodyIsInvalid) {
  RestEngine engine([](const httplib::Request&, httplib::Response& res) { res.set_content("<html>", "text/html"); });
  EXPECT_EQ(make_rest_client(engine.url())->exchange(kRequest, 1000ms).status,
            EngineReply::Status::invalid_response);
}

TEST(RestTransport, RefusedConnectionIsReported) {
  // Grab a free port and release it so nothing listens there.
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  auto reply = make_rest_client("http://127.0.0.1:" + std::to_string(port) + "/x")->exchange(kRequest, 500ms);
  EXPECT_NE(reply.status, EngineReply::Status::ok);
  EXPECT_FALSE(reply.detail.empty());
}

TEST(RestTransport, UnsupportedSchemes) {
  EXPECT_EQ(make_rest_client("https://engine.example/x")->exchange(kRequest, 100ms).status,
            EngineReply::Status::transport_error);
  EXPECT_EQ(make_rest_client("not a url")->exchange(kRequest, 100ms).status, EngineReply::Status::transport_error);
}

TEST(WebSocketTransport, OneFrameOutOneFrameBack) {
  WsEngine engine([](const std::string&) { return R"({"text":"Because rule R3 fired."})"; }, 0ms);
  auto reply = make_websocket_client(engine.url())->exchange(kRequest, 2000ms);
  EXPECT_EQ(reply.status, EngineReply::Status::ok) << reply.detail;
  EXPECT_EQ(reply.text, "Because rule R3 fired.");
  EXPECT_EQ(json::parse(engine.last_request()), kRequest);
}

TEST(WebSocketTransport, SlowEngineTimesOut) {
  WsEngine engine([](const std::string&) { return R"({"text":"late"})"; }, 600ms);
  auto started = std::chrono::steady_clock::now();
  auto reply = make_websocket_client(engine.url())->exchange(kRequest, 200ms);
  EXPECT_EQ(reply.status, EngineReply::Status::timeout) << reply.detail;
  EXPECT_LT(std::chrono::steady_clock::now() - started, 550ms);
}

TEST(WebSocketTransport, EmptyTextIsInvalid) {
  WsEngine engine([](const std::string&) { return R"({"text":""})"; }, 0ms);
  EXPECT_EQ(make_websocket_client(engine.url())->exchange(kRequest, 2000ms).status,
            EngineReply::Status::invalid_response);
}

TEST(WebSocketTransport, RejectsNonWebSocketUrls) {
  EXPECT_EQ(make_websocket_client("http://127.0.0.1:1/")->exchange(kRequest, 100ms).status,
            EngineReply::Status::transport_error);
}

TEST(EngineSelection, TransportFollowsTheEndpoint) {
  RestEngine rest([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"text":"rest"})", "application/json");
  });
  WsEngine ws([](const std::string&) { return R"({"text":"ws"})"; }, 0ms);
  EXPECT_EQ(make_engine_client(EngineEndpoint{rest.url(), EngineTransport::rest})->exchange(kRequest, 1000ms).text,
            "rest");
  EXPECT_EQ(make_engine_client(EngineEndpoint{ws.url(), EngineTransport::websocket})->exchange(kRequest, 1000ms).text,
            "ws");
}

TEST(EngineSelection, ExplainerUsesARealRestEngine) {
  json seen;
  RestEngine engine([&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"text":"Because rule R3 fired."})", "application/json");
  });
  auto scenario = testing::compile_json(testing::external_variant(engine.url()));
  Explainer ex(scenario, {"s-net", DeliveryMode::push, json::object(),
                          make_engine_client(*scenario->spec().explanationConfig.engineEndpoint)});
  auto state = sim::World::init(scenario, {{"outside_temp", 10.0}}).first.snapshot();
  auto created = ex.explain(cause::BlockedInteraction{"heater_must_stay_on", "heater", "power", false}, {"heater"},
                            state);
  EXPECT_EQ(created->instance->source, Source::external);
  EXPECT_EQ(created->instance->text, "Because rule R3 fired.");
  EXPECT_EQ(seen["cause"]["type"], "blockedInteraction");
}

TEST(Url, Parsing) {
  auto u = net::parse_url("http://localhost:8080/a/b?c=1");
  ASSERT_TRUE(u);
  EXPECT_EQ(u->host, "localhost");
  EXPECT_EQ(u->port, 8080);
  EXPECT_EQ(u->target, "/a/b?c=1");
  EXPECT_EQ(net::parse_url("ws://h")->port, 80);
  EXPECT_EQ(net::parse_url("wss://h")->port, 443);
  EXPECT_EQ(net::parse_url("https://h")->target, "/");
  EXPECT_FALSE(net::parse_url("ftp://h/"));
  EXPECT_FALSE(net::parse_url("http://"));
  EXPECT_FALSE(net::parse_url("h:80"));
}

}  // namespace
}  // namespace shine::explain
