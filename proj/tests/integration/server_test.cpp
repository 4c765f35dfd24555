// The study server over real loopback sockets: REST calls with an HTTP
// client, event traffic with a WebSocket client.

#include "fixtures.hpp"
#include "ws_client.hpp"

#include "shine/log/export.hpp"
#include "shine/log/replay.hpp"
#include "shine/log/storage.hpp"
#include "shine/session/server.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <map>
#include <thread>

namespace shine::session {
namespace {

using log::EventType;
using nlohmann::json;
using testing::WsClient;

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ManagerOptions o;
    o.liveClock = false;
    o.seed = 3;
    manager_ = std::make_unique<SessionManager>(
        std::map<std::string, std::shared_ptr<const CompiledScenario>>{{"default", testing::default_compiled()}},
        storage_, o);
    ServerOptions so;
    so.rest.researchToken = "secret";
    server_ = std::make_unique<Server>(*manager_, so);
    server_->start();
    manager_->set_public_base_url("ws://127.0.0.1:" + std::to_string(server_->port()));
    http_ = std::make_unique<httplib::Client>("127.0.0.1", server_->port());
    http_->set_read_timeout(std::chrono::seconds(5));
  }
  void TearDown() override { server_->stop(); }

  json create(const SessionContextParams& p = {}) {
    json req{{"scenarioId", "default"}, {"participantId", "p-int"}};
    if (p != SessionContextParams{}) req["context"] = encode_context_param(p);
    auto res = http_->Post("/api/sessions", req.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201) << res->body;
    return json::parse(res->body);
  }

  static json interact(int seq, const char* device, const char* prop, json value) {
    return {{"type", "device_interaction"},
            {"seq", seq},
            {"payload", {{"deviceId", device}, {"property", prop}, {"value", value}}}};
  }
  static std::vector<std::string> types(const std::vector<json>& events) {
    std::vector<std::string> out;
    for (const auto& e : events) out.push_back(e["type"]);
    return out;
  }

  /// Each event's seq must point at the log row that produced it.
  void expect_seqs_match_log(const std::string& sessionId, const std::vector<json>& events) {
    static const std::map<std::string, std::vector<EventType>> kRowsFor{
        {"state_update", {EventType::DEVICE_INTERACTION, EventType::RULE_FIRED, EventType::TRIGGER_FIRED}},
        {"task_update",
         {EventType::TASK_STARTED, EventType::TASK_COMPLETED, EventType::TASK_TIMEOUT, EventType::TASK_ABORTED}},
        {"interaction_blocked", {EventType::INTERACTION_BLOCKED}},
        {"explanation", {EventType::EXPLANATION_DELIVERED, EventType::EXPLANATION_REQUESTED}},
        {"explanation_available", {EventType::EXPLANATION_CREATED}},
        {"session_end", {EventType::SESSION_END}},
        {"error", {EventType::ERROR}},
    };
    auto rows = storage_->read_session(sessionId);
    for (const auto& e : events) {
      EXPECT_EQ(e["sessionId"], sessionId);
      if (e["type"] == "state_update" && e["payload"]["full"] == true) continue;
      std::int64_t seq = e["seq"];
      ASSERT_GE(seq, 1);
      ASSERT_LE(seq, static_cast<std::int64_t>(rows.size())) << e.dump();
      const auto& allowed = kRowsFor.at(e["type"]);
      EXPECT_NE(std::find(allowed.begin(), allowed.end(), rows[seq - 1].type), allowed.end())
          << e["type"] << " at seq " << seq << " points at " << log::to_string(rows[seq - 1].type);
    }
  }

  std::shared_ptr<log::MemoryStorage> storage_ = std::make_shared<log::MemoryStorage>();
  std::unique_ptr<SessionManager> manager_;
  std::unique_ptr<Server> server_;
  std::unique_ptr<httplib::Client> http_;
};

TEST_F(ServerTest, HealthAndCors) {
  auto res = http_->Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  auto pre = http_->Options("/api/sessions");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_NE(pre->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST_F(ServerTest, WalkthroughOverTheWire) {
  SessionContextParams p;
  p.deliveryMode = DeliveryMode::interactive;
  auto created = create(p);
  const std::string id = created["sessionId"];
  WsClient ws(created["wsUrl"]);
  std::vector<json> all;

  auto snapshot = ws.take(1);
  ASSERT_EQ(types(snapshot), std::vector<std::string>{"state_update"});
  EXPECT_TRUE(snapshot[0]["payload"]["full"].get<bool>());
  EXPECT_EQ(snapshot[0]["payload"]["deliveryMode"], "interactive");

  ws.send(interact(1, "window", "open", true));
  // The heater starts off, so heater_off completes as soon as it unlocks.
  auto opened = ws.take(4);
  EXPECT_EQ(types(opened),
            (std::vector<std::string>{"state_update", "task_update", "task_update", "task_update"}));
  EXPECT_EQ(opened[3]["payload"]["taskId"], "heater_off");
  EXPECT_EQ(opened[3]["payload"]["to"], "completed");
  all.insert(all.end(), opened.begin(), opened.end());

  // Virtual time is advanced in-process; the events still go out on the socket.
  manager_->get(id)->advance_to(10000);
  auto front = ws.take(3);
  EXPECT_EQ(types(front), (std::vector<std::string>{"state_update", "explanation", "explanation"}));
  EXPECT_EQ(front[2]["payload"]["text"], "The heater switched itself on because it is 14°C inside and 10°C outside.");
  all.insert(all.end(), front.begin(), front.end());

  ws.send(interact(2, "heater", "power", false));
  auto blocked = ws.take(2);
  ASSERT_EQ(types(blocked), (std::vector<std::string>{"interaction_blocked", "explanation"}));
  EXPECT_EQ(blocked[1]["payload"]["text"], "The indoor temperature is lower than 15°C.");
  all.insert(all.end(), blocked.begin(), blocked.end());

  ws.send({{"type", "explanation_query"}, {"seq", 3}, {"payload", {{"text", "Why? Is it because of the window?"}}}});
  auto why = ws.take(1);
  ASSERT_EQ(why.size(), 1u);
  EXPECT_EQ(why[0]["payload"]["text"], "The window is open and the outside temperature is below 15°C.");
  ws.send({{"type", "explanation_query"}, {"seq", 4}, {"payload", {{"text", "What can I do about it?"}}}});
  auto advice = ws.take(1);
  ASSERT_EQ(advice.size(), 1u);
  EXPECT_EQ(advice[0]["payload"]["text"], "Close the window, then you can switch off the heater.");
  all.insert(all.end(), why.begin(), why.end());
  all.insert(all.end(), advice.begin(), advice.end());

  ws.send({{"type", "explanation_rating"},
           {"seq", 5},
           {"payload", {{"instanceId", advice[0]["payload"]["instanceId"]}, {"value", "up"}}}});
  ws.send(interact(6, "window", "open", false));
  auto closed = ws.take(1);
  ws.send(interact(7, "heater", "power", false));
  auto off = ws.take(1);
  ASSERT_EQ(types(off), std::vector<std::string>{"state_update"});
  EXPECT_EQ(off[0]["payload"]["changes"][0]["newValue"], false);
  all.insert(all.end(), closed.begin(), closed.end());
  all.insert(all.end(), off.begin(), off.end());

  auto done = http_->Post("/api/sessions/" + id + "/complete", "", "application/json");
  ASSERT_TRUE(done);
  EXPECT_EQ(done->status, 200);
  auto end = ws.take(1);
  ASSERT_EQ(types(end), std::vector<std::string>{"session_end"});
  all.insert(all.end(), end.begin(), end.end());
  EXPECT_EQ(json::parse(done->body), end[0]["payload"]["summary"]);
  EXPECT_EQ(end[0]["payload"]["summary"]["counts"]["ratings"], 1);

  expect_seqs_match_log(id, all);
  EXPECT_NO_THROW(log::verify_sequence(storage_->read_session(id)));
}

TEST_F(ServerTest, SocketAuthentication) {
  auto created = create();
  const std::string id = created["sessionId"];
  const std::string base = "ws://127.0.0.1:" + std::to_string(server_->port());
  EXPECT_THROW(WsClient(base + "/ws/sessions/" + id + "?token=wrong"), boost::system::system_error);
  EXPECT_THROW(WsClient(base + "/ws/sessions/" + id), boost::system::system_error);
  EXPECT_THROW(WsClient(base + "/ws/sessions/s-unknown?token=x"), boost::system::system_error);
  EXPECT_THROW(WsClient(base + "/ws/elsewhere"), boost::system::system_error);
  EXPECT_NO_THROW(WsClient(created["wsUrl"].get<std::string>()));
}

TEST_F(ServerTest, ReconnectGetsAFreshSnapshot) {
  auto created = create();
  const std::string id = created["sessionId"];
  {
    WsClient ws(created["wsUrl"]);
    ws.take(1);
    ws.send(interact(1, "window", "open", true));
    ws.take(4);
    ws.close();
  }
  WsClient again(created["wsUrl"]);
  auto snap = again.take(1);
  ASSERT_EQ(snap.size(), 1u);
  EXPECT_TRUE(snap[0]["payload"]["full"].get<bool>());
  EXPECT_EQ(snap[0]["payload"]["devices"]["window"]["open"], true);
  EXPECT_EQ(snap[0]["payload"]["tasks"]["open_window"]["status"], "completed");
  EXPECT_EQ(snap[0]["payload"]["seq"], manager_->get(id)->last_seq());
  // The event stream continues on the new socket.
  again.send(interact(2, "window", "open", false));
  EXPECT_EQ(types(again.take(1)), std::vector<std::string>{"state_update"});
}

TEST_F(ServerTest, MalformedFramesAreErrorsNotDisconnects) {
  auto created = create();
  WsClient ws(created["wsUrl"]);
  ws.take(1);
  ws.send(json("just a string"));
  auto err = ws.take(1);
  ASSERT_EQ(types(err), std::vector<std::string>{"error"});
  EXPECT_EQ(err[0]["payload"]["code"], "bad_request");
  ws.send(interact(9, "window", "open", true));
  EXPECT_EQ(ws.take(1)[0]["type"], "state_update");
}

TEST_F(ServerTest, ConcurrentSessionsStayIsolated) {
  constexpr int kSessions = 6, kToggles = 20;
  std::vector<std::string> ids(kSessions);
  std::vector<std::vector<json>> received(kSessions);
  std::vector<std::thread> threads;
  for (int s = 0; s < kSessions; ++s) {
    auto created = create();
    ids[s] = created["sessionId"];
    threads.emplace_back([&, s, url = created["wsUrl"].get<std::string>()] {
      WsClient ws(url);
      ws.take(1);
      for (int i = 1; i <= kToggles; ++i) {
        ws.send(interact(i, "bedroom_lamp", "power", i % 2 == 1));
        auto ev = ws.take(1);
        received[s].insert(received[s].end(), ev.begin(), ev.end());
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int s = 0; s < kSessions; ++s) {
    ASSERT_EQ(received[s].size(), static_cast<std::size_t>(kToggles));
    for (const auto& e : received[s]) EXPECT_EQ(e["sessionId"], ids[s]);
    auto rows = storage_->read_session(ids[s]);
    EXPECT_NO_THROW(log::verify_sequence(rows));
    int interactions = 0;
    for (const auto& r : rows) interactions += r.type == EventType::DEVICE_INTERACTION;
    EXPECT_EQ(interactions, kToggles);
    expect_seqs_match_log(ids[s], received[s]);
  }
}

TEST_F(ServerTest, RestStateAndExport) {
  auto created = create();
  const std::string id = created["sessionId"];
  auto state = http_->Get("/api/sessions/" + id + "/state");
  ASSERT_TRUE(state);
  EXPECT_EQ(json::parse(state->body)["status"], "active");

  EXPECT_EQ(http_->Get("/api/sessions/" + id + "/events")->status, 401);
  httplib::Headers auth{{"Authorization", "Bearer secret"}};
  auto jsonl = http_->Get("/api/sessions/" + id + "/events?format=jsonl", auth);
  ASSERT_TRUE(jsonl);
  EXPECT_EQ(jsonl->status, 200);
  EXPECT_EQ(log::parse_jsonl(jsonl->body), storage_->read_session(id));
  auto csv = http_->Get("/api/sessions/" + id + "/events?format=csv", auth);
  EXPECT_EQ(log::parse_csv(csv->body), storage_->read_session(id));
  EXPECT_EQ(csv->get_header_value("Content-Type").substr(0, 8), "text/csv");
}

TEST_F(ServerTest, StopWithOpenSocketsIsClean) {
  auto created = create();
  WsClient ws(created["wsUrl"]);
  ws.take(1);
  server_->stop();
  // Events produced after the server stopped go nowhere and do not crash.
  manager_->get(created["sessionId"])->handle(interact(1, "window", "open", true));
  SUCCEED();
}

}  // namespace
}  // namespace shine::session
