#include "fixtures.hpp"

#include "shine/log/storage.hpp"
#include "shine/session/session.hpp"

#include <gtest/gtest.h>

namespace shine::session {
namespace {

using log::EventType;
using nlohmann::json;
using testing::default_compiled;

const std::string kBlockedText = "The indoor temperature is lower than 15°C.";
const std::string kCauseText = "The window is open and the outside temperature is below 15°C.";
const std::string kAutoHeatingText = "The heater switched itself on because it is 14°C inside and 10°C outside.";

class SessionTest : public ::testing::Test {
 protected:
  std::shared_ptr<Session> start(std::optional<DeliveryMode> mode = DeliveryMode::push,
                                 std::map<std::string, Literal> vars = {{"outside_temp", 10.0}}) {
    SessionConfig cfg;
    cfg.sessionId = "s-test";
    cfg.participantId = "p-7";
    cfg.token = "tok";
    cfg.params.deliveryMode = mode;
    cfg.params.contextVars = std::move(vars);
    cfg.params.userContext = json{{"expertise", "novice"}};
    cfg.storage = storage_;
    cfg.wallTime = [](std::int64_t t) { return log::iso8601_utc(1767225600000 + t); };
    cfg.steadyNow = [this] { return now_; };
    return Session::start(default_compiled(), cfg);
  }

  /// Started and attached, with the attach events dropped.
  std::shared_ptr<Session> attached(std::optional<DeliveryMode> mode = DeliveryMode::push) {
    auto s = start(mode);
    s->attach([this](const json& e) { sunk_.push_back(e); });
    sunk_.clear();
    return s;
  }

  json env(const std::string& type, json payload) {
    return json{{"type", type}, {"seq", ++client_seq_}, {"payload", std::move(payload)}};
  }
  json interact(const char* device, const char* prop, json value) {
    return env("device_interaction", {{"deviceId", device}, {"property", prop}, {"value", value}});
  }

  std::vector<log::LogEvent> rows() const { return storage_->read_session("s-test"); }
  std::vector<log::LogEvent> rows_after(std::int64_t seq) const {
    auto all = rows();
    return {all.begin() + seq, all.end()};
  }
  static std::vector<std::string> types(const std::vector<log::LogEvent>& rows) {
    std::vector<std::string> out;
    for (const auto& r : rows) out.emplace_back(log::to_string(r.type));
    return out;
  }
  static std::vector<std::string> types(const Session::Events& events) {
    std::vector<std::string> out;
    for (const auto& e : events) out.push_back(e["type"]);
    return out;
  }
  const log::LogEvent& row_at(std::int64_t seq) const {
    static thread_local std::vector<log::LogEvent> cache;
    cache = rows();
    return cache.at(seq - 1);
  }

  std::shared_ptr<log::MemoryStorage> storage_ = std::make_shared<log::MemoryStorage>();
  SteadyClock::time_point now_{};
  std::vector<json> sunk_;
  int client_seq_ = 0;
};

using V = std::vector<std::string>;

TEST_F(SessionTest, StartLogsSessionStartThenInitialisation) {
  auto s = start();
  auto log = rows();
  ASSERT_FALSE(log.empty());
  EXPECT_EQ(log[0].seq, 1);
  EXPECT_EQ(log[0].type, EventType::SESSION_START);
  EXPECT_EQ(log[0].payload["scenarioId"], "default");
  EXPECT_EQ(log[0].payload["participantId"], "p-7");
  EXPECT_EQ(log[0].payload["deliveryMode"], "push");
  EXPECT_EQ(log[0].payload["context"], json({{"outside_temp", 10.0}}));
  EXPECT_EQ(log[0].payload["userContext"]["expertise"], "novice");
  EXPECT_EQ(log[0].wallTime, "2026-01-01T00:00:00.000Z");
  // 14 °C inside and 10 °C outside: auto heating fires during initialisation.
  EXPECT_EQ(log[1].type, EventType::RULE_FIRED);
  EXPECT_EQ(log[1].payload["ruleId"], "auto_heating");
  EXPECT_EQ(log[1].payload["changes"],
            json::parse(R"([{"target":"heater.power","oldValue":false,"newValue":true}])"));
  EXPECT_EQ(storage_->get_session("s-test")->status, "active");
  EXPECT_EQ(s->status(), SessionStatus::active);
  EXPECT_EQ(s->last_seq(), static_cast<std::int64_t>(log.size()));
}

TEST_F(SessionTest, AttachSendsAFullSnapshotThenHeldPushExplanations) {
  auto s = start();
  std::vector<json> seen;
  auto a = s->attach([&](const json& e) { seen.push_back(e); });
  EXPECT_EQ(seen, a.events);
  ASSERT_EQ(types(a.events), (V{"state_update", "explanation"}));
  const json& snap = a.events[0];
  EXPECT_EQ(snap["sessionId"], "s-test");
  EXPECT_TRUE(snap["payload"]["full"].get<bool>());
  EXPECT_EQ(snap["payload"]["devices"]["heater"]["power"], true);
  EXPECT_EQ(snap["payload"]["tasks"]["open_window"]["status"], "active");
  EXPECT_EQ(snap["payload"]["tasks"]["heater_off"]["status"], "locked");
  EXPECT_EQ(a.events[1]["payload"]["text"], kAutoHeatingText);
  EXPECT_EQ(rows().back().type, EventType::EXPLANATION_DELIVERED);
  EXPECT_EQ(a.events[1]["seq"], s->last_seq());

  // A reconnect gets a fresh snapshot and no repeat of delivered explanations.
  auto again = s->attach(nullptr);
  EXPECT_EQ(types(again.events), V{"state_update"});
  EXPECT_EQ(again.events[0]["payload"]["seq"], s->last_seq());
  EXPECT_GT(again.generation, a.generation);
}

TEST_F(SessionTest, CommittedInteractionEmitsChangesAndTaskUpdates) {
  auto s = attached();
  auto before = s->last_seq();
  auto events = s->handle(interact("window", "open", true));
  EXPECT_EQ(events, sunk_);
  ASSERT_EQ(types(events), (V{"state_update", "task_update", "task_update"}));
  EXPECT_EQ(types(rows_after(before)), (V{"DEVICE_INTERACTION", "TASK_COMPLETED", "TASK_STARTED"}));

  const auto interaction_row = rows_after(before)[0];
  EXPECT_EQ(interaction_row.payload["outcome"], "committed");
  EXPECT_EQ(interaction_row.payload["clientSeq"], 1);

  const json& change = events[0]["payload"]["changes"][0];
  EXPECT_FALSE(events[0]["payload"]["full"].get<bool>());
  EXPECT_EQ(change["target"], "window.open");
  EXPECT_EQ(change["deviceId"], "window");
  EXPECT_EQ(change["property"], "open");
  EXPECT_EQ(change["oldValue"], false);
  EXPECT_EQ(change["newValue"], true);
  EXPECT_EQ(change["cause"]["type"], "userInteraction");
  EXPECT_EQ(change["cause"]["logSeq"], interaction_row.seq);
  EXPECT_EQ(events[0]["seq"], interaction_row.seq);

  EXPECT_EQ(events[1]["payload"]["taskId"], "open_window");
  EXPECT_EQ(events[1]["payload"]["to"], "completed");
  EXPECT_EQ(events[1]["payload"]["description"], "Open the living room window to let in some fresh air.");
  EXPECT_EQ(events[2]["payload"]["taskId"], "heater_off");
  EXPECT_EQ(events[2]["payload"]["from"], "locked");
  EXPECT_EQ(events[2]["payload"]["to"], "active");
  EXPECT_EQ(events[2]["seq"], s->last_seq());
}

TEST_F(SessionTest, SameValueWriteIsANoop) {
  auto s = attached();
  auto before = s->last_seq();
  EXPECT_TRUE(s->handle(interact("heater", "power", true)).empty());
  auto tail = rows_after(before);
  ASSERT_EQ(tail.size(), 1u);
  EXPECT_EQ(tail[0].payload["outcome"], "noop");
}

TEST_F(SessionTest, BlockedInteractionInPushMode) {
  auto s = attached();
  s->handle(interact("window", "open", true));
  auto before = s->last_seq();
  auto events = s->handle(interact("heater", "power", false));
  ASSERT_EQ(types(events), (V{"interaction_blocked", "explanation"}));
  auto tail = rows_after(before);
  ASSERT_EQ(types(tail), (V{"DEVICE_INTERACTION", "INTERACTION_BLOCKED", "EXPLANATION_CREATED",
                            "EXPLANATION_DELIVERED"}));
  EXPECT_EQ(tail[0].payload["outcome"], "blocked");
  EXPECT_EQ(events[0]["seq"], tail[1].seq);
  EXPECT_EQ(events[0]["payload"]["ruleId"], "heater_must_stay_on");
  EXPECT_EQ(events[0]["payload"]["attemptedValue"], false);
  EXPECT_EQ(events[0]["payload"]["explanationId"], "exp_heater_blocked");
  EXPECT_EQ(events[1]["seq"], tail[3].seq);
  EXPECT_EQ(events[1]["payload"]["text"], kBlockedText);
  EXPECT_FALSE(events[1]["payload"]["chatEnabled"].get<bool>());
  EXPECT_EQ(s->snapshot().devices.at("heater").at("power"), Literal(true));
}

TEST_F(SessionTest, PullHoldsUntilRequested) {
  auto s = attached(DeliveryMode::pull);
  s->handle(interact("window", "open", true));
  auto before = s->last_seq();
  auto events = s->handle(interact("heater", "power", false));
  ASSERT_EQ(types(events), (V{"interaction_blocked", "explanation_available"}));
  EXPECT_EQ(types(rows_after(before)), (V{"DEVICE_INTERACTION", "INTERACTION_BLOCKED", "EXPLANATION_CREATED"}));
  EXPECT_EQ(events[1]["seq"], s->last_seq());
  const std::string instance = events[1]["payload"]["instanceId"];
  EXPECT_EQ(events[1]["payload"]["devices"], json::array({"heater"}));
  EXPECT_FALSE(s->state()["explanations"].back()["delivered"].get<bool>());
  EXPECT_FALSE(s->state()["explanations"].back().contains("text"));

  before = s->last_seq();
  auto delivered = s->handle(env("explanation_request", {{"deviceId", "heater"}}));
  ASSERT_EQ(types(delivered), V{"explanation"});
  auto tail = rows_after(before);
  ASSERT_EQ(types(tail), (V{"EXPLANATION_REQUESTED", "EXPLANATION_DELIVERED"}));
  EXPECT_EQ(tail[0].payload["via"], "held");
  EXPECT_EQ(tail[0].payload["resolved"], instance);
  EXPECT_EQ(delivered[0]["payload"]["instanceId"], instance);
  EXPECT_EQ(delivered[0]["payload"]["text"], kBlockedText);
  EXPECT_GE(delivered[0]["payload"]["deliveredAtMs"].get<std::int64_t>(),
            delivered[0]["payload"]["createdAtMs"].get<std::int64_t>());

  // Asking again by id redelivers without another DELIVERED row.
  before = s->last_seq();
  auto again = s->handle(env("explanation_request", {{"instanceId", instance}}));
  ASSERT_EQ(types(again), V{"explanation"});
  ASSERT_EQ(types(rows_after(before)), V{"EXPLANATION_REQUESTED"});
  EXPECT_EQ(rows_after(before)[0].payload["via"], "redeliver");
}

TEST_F(SessionTest, PullExplanationsCreatedBeforeAttachAreNotPushed) {
  auto s = start(DeliveryMode::pull);
  auto a = s->attach(nullptr);
  EXPECT_EQ(types(a.events), V{"state_update"});
  EXPECT_EQ(rows().back().type, EventType::EXPLANATION_CREATED);
}

TEST_F(SessionTest, RequestWithNothingToExplain) {
  auto s = start(DeliveryMode::push, {});
  s->attach(nullptr);
  auto before = s->last_seq();
  auto events = s->handle(env("explanation_request", {{"deviceId", "kitchen_light"}}));
  ASSERT_EQ(types(events), V{"error"});
  EXPECT_EQ(events[0]["payload"]["code"], "no_explanation");
  auto tail = rows_after(before);
  ASSERT_EQ(types(tail), (V{"EXPLANATION_REQUESTED", "ERROR"}));
  EXPECT_EQ(tail[0].payload["via"], "none");
}

TEST_F(SessionTest, RequestFallsBackToTheMostRecentCauseForTheDevice) {
  auto s = attached();  // the auto heating explanation is already delivered
  auto before = s->last_seq();
  auto events = s->handle(env("explanation_request", {{"deviceId", "heater"}}));
  ASSERT_EQ(types(events), V{"explanation"});
  EXPECT_EQ(events[0]["payload"]["text"], kAutoHeatingText);
  EXPECT_EQ(events[0]["payload"]["cause"]["type"], "userRequest");
  auto tail = rows_after(before);
  ASSERT_EQ(types(tail), (V{"EXPLANATION_REQUESTED", "EXPLANATION_CREATED", "EXPLANATION_DELIVERED"}));
  EXPECT_EQ(tail[0].payload["via"], "userRequest");
}

TEST_F(SessionTest, UnknownInstanceRequest) {
  auto s = attached();
  auto events = s->handle(env("explanation_request", {{"instanceId", "exp-99"}}));
  ASSERT_EQ(types(events), V{"error"});
  EXPECT_EQ(events[0]["payload"]["code"], "unknown_instance");
}

TEST_F(SessionTest, InteractiveFollowUpQuery) {
  auto s = attached(DeliveryMode::interactive);
  s->handle(interact("window", "open", true));
  auto blocked = s->handle(interact("heater", "power", false));
  EXPECT_TRUE(blocked[1]["payload"]["chatEnabled"].get<bool>());
  const std::string parent = blocked[1]["payload"]["instanceId"];

  auto before = s->last_seq();
  auto events = s->handle(env("explanation_query", {{"text", "why is the indoor temperature low?"}}));
  ASSERT_EQ(types(events), V{"explanation"});
  EXPECT_EQ(events[0]["payload"]["text"], kCauseText);
  EXPECT_EQ(events[0]["payload"]["parentInstanceId"], parent);
  auto tail = rows_after(before);
  ASSERT_EQ(types(tail), (V{"EXPLANATION_QUERY", "EXPLANATION_CREATED", "EXPLANATION_DELIVERED"}));
  EXPECT_EQ(tail[0].payload["matched"], true);
  EXPECT_EQ(tail[0].payload["specId"], "exp_heater_cause");
  EXPECT_EQ(tail[0].payload["parentInstanceId"], parent);

  auto unmatched = s->handle(env("explanation_query", {{"text", "banana"}}));
  EXPECT_EQ(unmatched[0]["payload"]["text"], "I have no further explanation for this.");
}

TEST_F(SessionTest, QueriesNeedInteractiveMode) {
  for (auto mode : {DeliveryMode::push, DeliveryMode::pull}) {
    storage_ = std::make_shared<log::MemoryStorage>();
    auto s = attached(mode);
    auto events = s->handle(env("explanation_query", {{"text", "why?"}}));
    ASSERT_EQ(types(events), V{"error"});
    EXPECT_EQ(events[0]["payload"]["code"], "not_interactive");
    EXPECT_EQ(rows().back().type, EventType::ERROR);
  }
}

TEST_F(SessionTest, RatingsAreLoggedWithRevisions) {
  auto s = attached();
  const std::string id = s->state()["explanations"][0]["instanceId"];
  auto before = s->last_seq();
  EXPECT_TRUE(s->handle(env("explanation_rating", {{"instanceId", id}, {"value", "up"}})).empty());
  EXPECT_TRUE(s->handle(env("explanation_rating", {{"instanceId", id}, {"value", "down"}})).empty());
  auto tail = rows_after(before);
  ASSERT_EQ(types(tail), (V{"EXPLANATION_RATED", "EXPLANATION_RATED"}));
  EXPECT_EQ(tail[0].payload["revision"], false);
  EXPECT_FALSE(tail[0].payload.contains("previous"));
  EXPECT_EQ(tail[1].payload["value"], "down");
  EXPECT_EQ(tail[1].payload["previous"], "up");
  EXPECT_EQ(tail[1].payload["revision"], true);
  EXPECT_EQ(s->state()["explanations"][0]["rating"], "down");

  auto bad = s->handle(env("explanation_rating", {{"instanceId", id}, {"value", "meh"}}));
  EXPECT_EQ(bad[0]["payload"]["code"], "bad_request");
}

TEST_F(SessionTest, RatingAHeldExplanationIsRejected) {
  auto s = attached(DeliveryMode::pull);
  const std::string id = s->state()["explanations"][0]["instanceId"];
  auto events = s->handle(env("explanation_rating", {{"instanceId", id}, {"value", "up"}}));
  EXPECT_EQ(events[0]["payload"]["code"], "not_delivered");
}

TEST_F(SessionTest, TelemetryIsLoggedSilently) {
  auto s = attached();
  EXPECT_TRUE(s->handle(env("client_telemetry", {{"kind", "move"}, {"room", "kitchen"}})).empty());
  EXPECT_EQ(rows().back().type, EventType::CLIENT_TELEMETRY);
  EXPECT_EQ(rows().back().payload["data"]["room"], "kitchen");
  EXPECT_EQ(rows().back().payload["clientSeq"], 1);
}

TEST_F(SessionTest, AbortTask) {
  auto s = attached();
  auto events = s->handle(env("abort_task", {{"taskId", "make_coffee"}}));
  ASSERT_EQ(types(events), V{"task_update"});
  EXPECT_EQ(events[0]["payload"]["to"], "aborted");
  EXPECT_EQ(rows().back().type, EventType::TASK_ABORTED);
  EXPECT_EQ(s->handle(env("abort_task", {{"taskId", "open_window"}}))[0]["payload"]["code"], "task_not_abortable");
  EXPECT_EQ(s->handle(env("abort_task", {{"taskId", "nap"}}))[0]["payload"]["code"], "unknown_task");
}

TEST_F(SessionTest, MalformedEventsYieldErrorsAndKeepTheSessionLive) {
  auto s = attached();
  struct Case {
    json envelope;
    std::string code;
  };
  std::vector<Case> cases{
      {json::array(), "bad_request"},
      {json{{"seq", 1}, {"payload", json::object()}}, "bad_request"},
      {json{{"type", "device_interaction"}, {"payload", json::object()}}, "bad_request"},
      {json{{"type", "client_telemetry"}, {"seq", 2}, {"payload", 3}}, "bad_request"},
      {json{{"type", "client_telemetry"}, {"seq", 3}, {"sessionId", "s-other"}, {"payload", json::object()}},
       "bad_request"},
      {env("teleport", json::object()), "unknown_type"},
      {env("device_interaction", {{"deviceId", "heater"}}), "bad_request"},
      {interact("toaster", "power", true), "unknown_target"},
      {interact("thermostat", "temperature", 20), "not_writable"},
      {interact("heater", "target_temp", 100), "out_of_domain"},
      {interact("heater", "target_temp", 21.3), "out_of_domain"},
      {interact("kitchen_light", "brightness", "blinding"), "out_of_domain"},
      {interact("heater", "power", json::array()), "bad_request"},
  };
  for (const auto& c : cases) {
    auto before = s->last_seq();
    auto events = s->handle(c.envelope);
    ASSERT_EQ(types(events), V{"error"}) << c.envelope.dump();
    EXPECT_EQ(events[0]["payload"]["code"], c.code) << c.envelope.dump();
    EXPECT_EQ(events[0]["seq"], s->last_seq());
    ASSERT_EQ(types(rows_after(before)), V{"ERROR"}) << c.envelope.dump();
    if (c.envelope.is_object() && c.envelope.contains("seq")) {
      EXPECT_EQ(events[0]["payload"]["clientSeq"], c.envelope["seq"]);
    }
  }
  EXPECT_EQ(s->status(), SessionStatus::active);
  EXPECT_EQ(s->summary()["counts"]["errors"], cases.size());
  EXPECT_EQ(s->handled_count(), cases.size());
}

TEST_F(SessionTest, VirtualTimeFiresTriggersAtTheirInstant) {
  auto s = start(DeliveryMode::push, {});  // 18 °C outside until the cold front
  s->attach(nullptr);
  s->advance_to(2000);
  s->handle(interact("window", "open", true));
  EXPECT_EQ(rows().back().tMs, 2000);
  auto events = s->advance_to(30000);
  // The cold front drops the temperature, auto heating reacts in the same step.
  ASSERT_EQ(types(events), (V{"state_update", "explanation", "explanation"}));
  EXPECT_EQ(events[0]["payload"]["cause"]["triggerId"], "cold_front");
  ASSERT_EQ(events[0]["payload"]["changes"].size(), 2u);
  EXPECT_EQ(events[0]["payload"]["changes"][0]["target"], "context.outside_temp");
  EXPECT_EQ(events[0]["payload"]["changes"][0]["context"], "outside_temp");
  EXPECT_EQ(events[0]["payload"]["changes"][1]["target"], "heater.power");
  EXPECT_EQ(events[0]["payload"]["changes"][1]["cause"]["ruleId"], "auto_heating");
  EXPECT_EQ(events[1]["payload"]["text"], "A cold front arrived: it is now 10°C outside.");
  EXPECT_EQ(events[2]["payload"]["text"], kAutoHeatingText);
  bool found = false;
  for (const auto& r : rows()) {
    if (r.type == EventType::TRIGGER_FIRED) {
      found = true;
      EXPECT_EQ(r.tMs, 12000);  // 10 s after the window interaction
      EXPECT_EQ(r.payload["atMs"], 12000);
    }
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(s->clock_ms(), 30000);
  EXPECT_THROW(s->advance_to(29999), sim::SimulationError);
}

TEST_F(SessionTest, TaskTimeoutIsReported) {
  auto s = attached();
  s->handle(interact("window", "open", true));  // heater_off starts at 0 with a 180 s limit
  s->advance_to(180000);
  EXPECT_EQ(s->snapshot().tasks.at("heater_off").status, sim::TaskStatus::active);
  auto events = s->advance_to(181000);
  ASSERT_EQ(types(events), V{"task_update"});
  EXPECT_EQ(events[0]["payload"]["to"], "timedOut");
  EXPECT_EQ(rows().back().type, EventType::TASK_TIMEOUT);
}

TEST_F(SessionTest, CompleteIsIdempotent) {
  auto s = attached();
  s->handle(interact("window", "open", true));
  Session::Events events;
  auto summary = s->complete(&events);
  ASSERT_EQ(types(events), V{"session_end"});
  EXPECT_EQ(events[0]["payload"]["reason"], "completed");
  EXPECT_EQ(events[0]["payload"]["summary"], summary);
  EXPECT_EQ(s->complete(), summary);
  int ends = 0;
  for (const auto& r : rows()) ends += r.type == EventType::SESSION_END;
  EXPECT_EQ(ends, 1);
  EXPECT_EQ(rows().back().type, EventType::SESSION_END);

  EXPECT_EQ(summary["status"], "completed");
  EXPECT_EQ(summary["counts"]["interactions"], 1);
  EXPECT_EQ(summary["counts"]["explanationsDelivered"], 1);
  EXPECT_EQ(summary["participantId"], "p-7");
  auto record = storage_->get_session("s-test");
  EXPECT_EQ(record->status, "completed");
  EXPECT_EQ(record->summary, summary);

  // Closed sessions answer with an error event but log nothing further.
  auto last = s->last_seq();
  auto late = s->handle(interact("window", "open", false));
  ASSERT_EQ(types(late), V{"error"});
  EXPECT_EQ(late[0]["payload"]["code"], "session_closed");
  EXPECT_EQ(s->last_seq(), last);
  EXPECT_TRUE(s->advance_to(999999).empty());
}

TEST_F(SessionTest, ExpiredSessionsCannotComplete) {
  auto s = attached();
  Session::Events events;
  EXPECT_TRUE(s->expire(&events));
  EXPECT_EQ(events[0]["payload"]["reason"], "expired");
  EXPECT_FALSE(s->expire());
  EXPECT_EQ(s->status(), SessionStatus::expired);
  try {
    s->complete();
    ADD_FAILURE();
  } catch (const SessionError& e) {
    EXPECT_EQ(e.kind(), SessionError::Kind::conflict);
  }
  EXPECT_EQ(storage_->get_session("s-test")->status, "expired");
}

TEST_F(SessionTest, IdleTimeCountsFromTheLastClientEvent) {
  auto s = attached();
  now_ += std::chrono::minutes(59);
  EXPECT_FALSE(s->idle_for(std::chrono::minutes(60)));
  s->handle(env("client_telemetry", json::object()));
  now_ += std::chrono::minutes(59);
  EXPECT_FALSE(s->idle_for(std::chrono::minutes(60)));
  now_ += std::chrono::minutes(1);
  EXPECT_TRUE(s->idle_for(std::chrono::minutes(60)));
}

TEST_F(SessionTest, DetachStopsDeliveryForThatGenerationOnly) {
  auto s = start();
  std::vector<json> first, second;
  auto a = s->attach([&](const json& e) { first.push_back(e); });
  auto b = s->attach([&](const json& e) { second.push_back(e); });
  s->detach(a.generation);  // stale, ignored
  s->handle(interact("window", "open", true));
  EXPECT_EQ(first.size(), a.events.size());
  EXPECT_EQ(second.size(), b.events.size() + 3);
  EXPECT_EQ(s->emitted_count(), second.size());
  s->detach(b.generation);
  s->handle(interact("window", "open", false));
  EXPECT_EQ(second.size(), b.events.size() + 3);
}

TEST_F(SessionTest, EventSeqsNeverRunAheadOfTheLog) {
  auto s = attached(DeliveryMode::interactive);
  std::vector<json> all;
  auto take = [&](const Session::Events& ev) { all.insert(all.end(), ev.begin(), ev.end()); };
  take(s->handle(interact("window", "open", true)));
  take(s->advance_to(15000));
  take(s->handle(interact("heater", "power", false)));
  take(s->handle(env("explanation_query", {{"text", "why"}})));
  take(s->handle(interact("window", "open", false)));
  take(s->handle(interact("heater", "power", false)));
  std::int64_t prev = 0;
  auto log = rows();
  for (const auto& e : all) {
    std::int64_t seq = e["seq"];
    EXPECT_GE(seq, prev) << e.dump();
    EXPECT_LE(seq, static_cast<std::int64_t>(log.size()));
    prev = seq;
  }
  EXPECT_EQ(s->state()["seq"], s->last_seq());
  EXPECT_EQ(s->snapshot().tasks.at("heater_off").status, sim::TaskStatus::completed);
}

TEST_F(SessionTest, UnknownContextIsABadRequest) {
  try {
    start(DeliveryMode::push, {{"humidity", 40.0}});
    ADD_FAILURE();
  } catch (const SessionError& e) {
    EXPECT_EQ(e.kind(), SessionError::Kind::bad_request);
  }
  EXPECT_TRUE(rows().empty());
}

TEST_F(SessionTest, DefaultModeComesFromTheScenario) {
  auto s = start(std::nullopt);
  EXPECT_EQ(s->delivery_mode(), DeliveryMode::push);
  EXPECT_EQ(rows()[0].payload["deliveryMode"], "push");
}

}  // namespace
}  // namespace shine::session
