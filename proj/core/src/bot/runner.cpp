#include "shine/bot/runner.hpp"

#include "shine/net/url.hpp"
#include "shine/session/server.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <httplib.h>

#include <condition_variable>
#include <deque>
#include <thread>

namespace shine::bot {

using nlohmann::json;
using Events = std::vector<json>;

namespace {

class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the runner talks to the session.
class Driver {
 public:
  virtual ~Driver() = default;
  virtual Events connect() = 0;
  virtual Events send(const json& envelope) = 0;
  virtual Events wait(std::int64_t ms) = 0;
  virtual json complete(Events& events) = 0;
  virtual json state() = 0;
  virtual std::shared_ptr<session::Session> session() const = 0;
};

session::ManagerOptions manager_options(const RunOptions& o) {
  session::ManagerOptions m;
  m.liveClock = false;
  m.seed = o.seed;
  if (o.engineFactory) m.engineFactory = o.engineFactory;
  return m;
}

std::map<std::string, std::shared_ptr<const CompiledScenario>> one(std::shared_ptr<const CompiledScenario> sc) {
  std::map<std::string, std::shared_ptr<const CompiledScenario>> m;
  m[sc->spec().id] = std::move(sc);
  return m;
}

class InProcessDriver : public Driver {
 public:
  InProcessDriver(std::shared_ptr<const CompiledScenario> sc, const BotScript& script, const RunOptions& o,
                  std::shared_ptr<log::StorageDriver> storage)
      : manager_(one(sc), std::move(storage), manager_options(o)) {
    session_ = manager_.create(sc->spec().id, script.participantId, script.context).session;
  }

  Events connect() override { return session_->attach(nullptr).events; }
  Events send(const json& envelope) override { return session_->handle(envelope); }
  Events wait(std::int64_t ms) override { return session_->advance_to(session_->clock_ms() + ms); }
  json complete(Events& events) override { return session_->complete(&events); }
  json state() override { return session_->state(); }
  std::shared_ptr<session::Session> session() const override { return session_; }

 private:
  session::SessionManager manager_;
  std::shared_ptr<session::Session> session_;
};

namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

class NetworkDriver : public Driver {
 public:
  NetworkDriver(std::shared_ptr<const CompiledScenario> sc, const BotScript& script, const RunOptions& o,
                std::shared_ptr<log::StorageDriver> storage)
      : timeout_(o.networkTimeout),
        manager_(one(sc), std::move(storage), manager_options(o)),
        server_(manager_, session::ServerOptions{"127.0.0.1", 0, 2, {}}) {
    server_.start();
    manager_.set_public_base_url("ws://127.0.0.1:" + std::to_string(server_.port()));
    http_ = std::make_unique<httplib::Client>("127.0.0.1", server_.port());
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_).count() + 1;
    http_->set_read_timeout(secs, 0);
    http_->set_connection_timeout(secs, 0);

    json body{{"scenarioId", sc->spec().id},
              {"participantId", script.participantId},
              {"context", session::encode_context_param(script.context)}};
    auto res = http_->Post("/api/sessions", body.dump(), "application/json");
    if (!res || res->status != 201) {
      throw RunFailure("session creation failed: " + (res ? res->body : httplib::to_string(res.error())));
    }
    json created = json::parse(res->body);
    session_ = manager_.get(created.at("sessionId").get<std::string>());
    ws_url_ = created.at("wsUrl").get<std::string>();
  }

  ~NetworkDriver() override {
    beast::error_code ignored;
    if (ws_) ws_->next_layer().socket().shutdown(tcp::socket::shutdown_both, ignored);
    if (reader_.joinable()) reader_.join();
    ws_.reset();
    server_.stop();
  }

  Events connect() override {
    auto url = net::parse_url(ws_url_);
    if (!url) throw RunFailure("server returned a bad wsUrl: " + ws_url_);
    tcp::resolver resolver(ioc_);
    ws_ = std::make_unique<websocket::stream<beast::tcp_stream>>(ioc_);
    ws_->next_layer().connect(resolver.resolve(url->host, std::to_string(url->port)));
    ws_->handshake(url->host, url->target);
    ws_->text(true);
    reader_ = std::thread([this] { read_loop(); });
    // The initial snapshot proves the server attached us.
    await([this] { return received_.size() >= 1; });
    return catch_up();
  }

  Events send(const json& envelope) override {
    ws_->write(boost::asio::buffer(envelope.dump()));
    ++sent_;
    await([this] { return session_->handled_count() >= sent_; });
    return catch_up();
  }

  Events wait(std::int64_t ms) override {
    session_->advance_to(session_->clock_ms() + ms);
    return catch_up();
  }

  json complete(Events& events) override {
    auto res = http_->Post("/api/sessions/" + session_->id() + "/complete", "", "application/json");
    if (!res || res->status != 200) throw RunFailure("completion failed: " + (res ? res->body : std::string("no reply")));
    events = catch_up();
    return json::parse(res->body);
  }

  json state() override {
    auto res = http_->Get("/api/sessions/" + session_->id() + "/state");
    if (!res || res->status != 200) throw RunFailure("state fetch failed");
    return json::parse(res->body);
  }

  std::shared_ptr<session::Session> session() const override { return session_; }

 private:
  void read_loop() {
    for (;;) {
      beast::flat_buffer buf;
      beast::error_code ec;
      ws_->read(buf, ec);
      std::lock_guard lock(mu_);
      if (ec) {
        closed_ = true;
        cv_.notify_all();
        return;
      }
      received_.push_back(json::parse(beast::buffers_to_string(buf.data()), nullptr, false));
      cv_.notify_all();
    }
  }

  template <class Pred>
  void await(Pred pred) {
    auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::unique_lock lock(mu_);
    while (!pred()) {
      if (closed_) throw RunFailure("event socket closed early");
      if (std::chrono::steady_clock::now() >= deadline) throw RunFailure("timed out waiting for the server");
      cv_.wait_for(lock, std::chrono::milliseconds(2));
    }
  }

  /// Everything the server has pushed so far that we have not returned yet.
  Events catch_up() {
    std::uint64_t target = session_->emitted_count();
    await([&] { return received_.size() >= target; });
    std::lock_guard lock(mu_);
    Events out(received_.begin() + static_cast<std::ptrdiff_t>(returned_), received_.end());
    returned_ = received_.size();
    return out;
  }

  std::chrono::milliseconds timeout_;
  session::SessionManager manager_;
  session::Server server_;
  std::unique_ptr<httplib::Client> http_;
  std::shared_ptr<session::Session> session_;
  std::string ws_url_;
  boost::asio::io_context ioc_;
  std::unique_ptr<websocket::stream<beast::tcp_stream>> ws_;
  std::thread reader_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<json> received_;
  std::size_t returned_ = 0;
  std::uint64_t sent_ = 0;
  bool closed_ = false;
};

const json* last_of(const Events& events, std::string_view type) {
  for (auto it = events.rbegin(); it != events.rend(); ++it) {
    if ((*it)["type"] == type) return &*it;
  }
  return nullptr;
}

}  // namespace

RunResult run_bot(std::shared_ptr<const CompiledScenario> scenario, const BotScript& script,
                  const RunOptions& options) {
  RunResult result;
  auto storage = options.storage ? options.storage : std::make_shared<log::MemoryStorage>();
  std::unique_ptr<Driver> driver;
  try {
    if (options.viaNetwork) {
      driver = std::make_unique<NetworkDriver>(scenario, script, options, storage);
    } else {
      driver = std::make_unique<InProcessDriver>(scenario, script, options, storage);
    }
  } catch (const std::exception& e) {
    result.passed = false;
    result.message = e.what();
    return result;
  }
  result.sessionId = driver->session()->id();

  std::int64_t clientSeq = 0;
  Events lastInteraction;
  std::optional<json> lastExplanation;
  auto take = [&](Events events) {
    for (auto& e : events) {
      if (e["type"] == "explanation") lastExplanation = e["payload"];
      if (e["type"] == "error") ++result.serverErrors;
      result.received.push_back(std::move(e));
    }
  };
  auto envelope = [&](const char* type, json payload) {
    return json{{"type", type}, {"sessionId", result.sessionId}, {"seq", ++clientSeq}, {"payload", std::move(payload)}};
  };
  auto fail = [&](std::size_t i, const std::string& why) {
    if (!result.passed) return;
    result.passed = false;
    result.failedStep = i;
    result.message = "step " + std::to_string(i) + " (" + describe(script.steps[i]) + "): " + why;
  };

  try {
    take(driver->connect());
    for (std::size_t i = 0; i < script.steps.size() && result.passed; ++i) {
      const Step& s = script.steps[i];
      if (const auto* w = std::get_if<step::Wait>(&s)) {
        take(driver->wait(w->ms));
      } else if (const auto* in = std::get_if<step::Interact>(&s)) {
        lastInteraction = driver->send(envelope(
            "device_interaction",
            {{"deviceId", in->deviceId}, {"property", in->property}, {"value", shine::to_json(in->value)}}));
        take(lastInteraction);
      } else if (const auto* rq = std::get_if<step::RequestExplanation>(&s)) {
        json p = json::object();
        if (rq->deviceId) p["deviceId"] = *rq->deviceId;
        take(driver->send(envelope("explanation_request", p)));
      } else if (const auto* q = std::get_if<step::Query>(&s)) {
        take(driver->send(envelope("explanation_query", {{"text", q->text}})));
      } else if (const auto* r = std::get_if<step::Rate>(&s)) {
        std::string id = r->instanceId.value_or(lastExplanation ? (*lastExplanation)["instanceId"].get<std::string>()
                                                                : std::string());
        if (id.empty()) {
          fail(i, "no explanation has been received to rate");
          break;
        }
        take(driver->send(envelope("explanation_rating", {{"instanceId", id}, {"value", r->value}})));
      } else if (const auto* t = std::get_if<step::Telemetry>(&s)) {
        take(driver->send(envelope("client_telemetry", t->data)));
      } else if (const auto* a = std::get_if<step::AbortTask>(&s)) {
        take(driver->send(envelope("abort_task", {{"taskId", a->taskId}})));
      } else if (const auto* eb = std::get_if<step::ExpectBlocked>(&s)) {
        const json* blocked = last_of(lastInteraction, "interaction_blocked");
        if (!blocked) {
          fail(i, "the last interaction was not blocked");
        } else if (eb->ruleId && (*blocked)["payload"]["ruleId"] != *eb->ruleId) {
          fail(i, "blocked by " + (*blocked)["payload"]["ruleId"].get<std::string>() + ", expected " + *eb->ruleId);
        }
      } else if (const auto* et = std::get_if<step::ExpectTask>(&s)) {
        json st = driver->state();
        auto task = st["tasks"].find(et->taskId);
        if (task == st["tasks"].end()) {
          fail(i, "unknown task " + et->taskId);
        } else if ((*task)["status"] != et->status) {
          fail(i, "task " + et->taskId + " is " + (*task)["status"].get<std::string>() + ", expected " + et->status);
        }
      } else if (const auto* ee = std::get_if<step::ExpectExplanation>(&s)) {
        if (!lastExplanation) {
          fail(i, "no explanation has been received");
        } else if (ee->text && (*lastExplanation)["text"] != *ee->text) {
          fail(i, "explanation text was \"" + (*lastExplanation)["text"].get<std::string>() + "\"");
        } else if (ee->source && (*lastExplanation)["source"] != *ee->source) {
          fail(i, "explanation source was " + (*lastExplanation)["source"].get<std::string>());
        }
      }
      // Complete is handled below so that failed runs still end their session.
    }
    Events end;
    result.summary = driver->complete(end);
    take(std::move(end));
  } catch (const std::exception& e) {
    if (result.passed) {
      result.passed = false;
      result.message = e.what();
    }
    try {
      result.summary = driver->session()->complete();
    } catch (const std::exception&) {
    }
  }
  result.finalState = driver->session()->snapshot();
  return result;
}

}  // namespace shine::bot
