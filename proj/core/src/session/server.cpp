#include "shine/session/server.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <sodium.h>

#include <deque>
#include <regex>
#include <shared_mutex>
#include <thread>

namespace shine::session {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t kBodyLimit = 1 << 20;
constexpr auto kHttpTimeout = std::chrono::seconds(30);

void add_cors(http::response<http::string_body>& res) {
  res.set(http::field::access_control_allow_origin, "*");
  res.set(http::field::access_control_allow_headers, "Content-Type, Authorization");
  res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
}

/// Closed by Server::stop so sinks left on live sessions stop posting to a
/// dying io_context.
struct Gate {
  std::shared_mutex mu;
  bool open = true;
};

bool token_equal(const std::string& a, const std::string& b) {
  return a.size() == b.size() && sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

/// One upgraded event socket bound to a session.
class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<Session> session, std::shared_ptr<Gate> gate)
      : ws_(std::move(socket)), session_(std::move(session)), gate_(std::move(gate)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    std::weak_ptr<WsConnection> weak = shared_from_this();
    auto exec = ws_.get_executor();
    // The sink runs under the session lock; it only hands text to our strand.
    auto attachment = session_->attach([weak, exec, gate = gate_](const json& event) {
      std::shared_lock lock(gate->mu);
      if (!gate->open) return;
      asio::post(exec, [weak, text = event.dump()]() mutable {
        if (auto self = weak.lock()) self->send(std::move(text));
      });
    });
    generation_ = attachment.generation;
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      session_->detach(generation_);
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    json envelope = json::parse(text, nullptr, false);
    if (envelope.is_discarded()) envelope = json();  // reported as an error event
    session_->handle(envelope);
    read();
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void write() {
    ws_.async_write(asio::buffer(queue_.front()),
                    beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      queue_.clear();
      session_->detach(generation_);
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Session> session_;
  std::shared_ptr<Gate> gate_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::uint64_t generation_ = 0;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, SessionManager& manager, const RestOptions& rest, std::shared_ptr<Gate> gate)
      : stream_(std::move(socket)), manager_(manager), rest_(rest), gate_(std::move(gate)) {}

  void run() {
    asio::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::read, shared_from_this()));
  }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(kBodyLimit);
    stream_.expires_after(kHttpTimeout);
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (ec) return;
    auto req = parser_->release();
    if (websocket::is_upgrade(req)) {
      upgrade(std::move(req));
      return;
    }
    respond(route(req));
  }

  http::response<http::string_body> make(const http::request<http::string_body>& req, int status,
                                         std::string contentType, std::string body) {
    http::response<http::string_body> res{static_cast<http::status>(status), req.version()};
    res.set(http::field::server, "shine");
    if (!contentType.empty()) res.set(http::field::content_type, contentType);
    add_cors(res);
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  }

  http::response<http::string_body> route(const http::request<http::string_body>& req) {
    if (req.method() == http::verb::options) return make(req, 204, "", "");
    HttpRequest r;
    r.method = std::string(req.method_string());
    r.target = std::string(req.target());
    r.body = req.body();
    for (const auto& field : req) {
      std::string name(field.name_string());
      for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      r.headers[name] = std::string(field.value());
    }
    HttpResponse out;
    try {
      out = handle_rest(manager_, r, rest_);
    } catch (const std::exception& e) {
      out = {500, "application/json", json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump()};
    }
    return make(req, out.status, out.contentType, std::move(out.body));
  }

  void upgrade(http::request<http::string_body> req) {
    static const std::regex kWs(R"(/ws/sessions/([A-Za-z0-9_\-]+))");
    auto [path, query] = split_target(std::string(req.target()));
    std::smatch m;
    if (!std::regex_match(path, m, kWs)) {
      respond(make(req, 404, "application/json", R"({"error":{"code":"not_found","message":"no socket here"}})"));
      return;
    }
    auto session = manager_.find(m[1]);
    if (!session) {
      respond(make(req, 404, "application/json", R"({"error":{"code":"not_found","message":"unknown session"}})"));
      return;
    }
    if (!query.count("token") || !token_equal(query["token"], session->token())) {
      respond(make(req, 401, "application/json", R"({"error":{"code":"unauthorized","message":"bad session token"}})"));
      return;
    }
    stream_.expires_never();
    std::make_shared<WsConnection>(stream_.release_socket(), std::move(session), gate_)->run(std::move(req));
  }

  void respond(http::response<http::string_body> res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    bool close = sp->need_eof();
    http::async_write(stream_, *sp,
                      [self = shared_from_this(), sp, close](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (close) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  SessionManager& manager_;
  const RestOptions& rest_;
  std::shared_ptr<Gate> gate_;
};

}  // namespace

struct Server::Impl {
  Impl(SessionManager& m, ServerOptions o) : manager(m), options(std::move(o)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == asio::error::operation_aborted || !acceptor.is_open()) return;
      if (!ec) std::make_shared<HttpConnection>(std::move(socket), manager, options.rest, gate)->run();
      accept();
    });
  }

  SessionManager& manager;
  ServerOptions options;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::shared_ptr<Gate> gate = std::make_shared<Gate>();
  std::vector<std::thread> threads;
  unsigned short port = 0;
};

Server::Server(SessionManager& manager, ServerOptions options)
    : impl_(std::make_unique<Impl>(manager, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  if (sodium_init() < 0) throw std::runtime_error("libsodium failed to initialize");
  auto& acc = impl_->acceptor;
  tcp::endpoint ep(asio::ip::make_address(impl_->options.address), impl_->options.port);
  acc.open(ep.protocol());
  acc.set_option(asio::socket_base::reuse_address(true));
  acc.bind(ep);
  acc.listen(asio::socket_base::max_listen_connections);
  impl_->port = acc.local_endpoint().port();
  impl_->accept();
  int n = std::max(1, impl_->options.threads);
  for (int i = 0; i < n; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
}

void Server::stop() {
  if (!impl_ || impl_->threads.empty()) return;
  {
    std::unique_lock lock(impl_->gate->mu);
    impl_->gate->open = false;
  }
  asio::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

unsigned short Server::port() const { return impl_->port; }

}  // namespace shine::session
