#include "shine/session/session.hpp"

#include <algorithm>

namespace shine::session {

using nlohmann::json;
using log::EventType;

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::active: return "active";
    case SessionStatus::completed: return "completed";
    case SessionStatus::expired: return "expired";
  }
  return "active";
}

namespace {

std::string_view error_code(sim::SimulationError::Kind k) {
  using K = sim::SimulationError::Kind;
  switch (k) {
    case K::unknown_target: return "unknown_target";
    case K::not_writable: return "not_writable";
    case K::out_of_domain: return "out_of_domain";
    case K::unknown_context: return "unknown_context";
    case K::clock_regression: return "clock_regression";
    case K::unknown_task: return "unknown_task";
    case K::task_not_abortable: return "task_not_abortable";
  }
  return "simulation_error";
}

std::string_view error_code(explain::ExplanationError::Kind k) {
  using K = explain::ExplanationError::Kind;
  switch (k) {
    case K::unknown_instance: return "unknown_instance";
    case K::not_delivered: return "not_delivered";
    case K::not_interactive: return "not_interactive";
  }
  return "explanation_error";
}

EventType task_event(sim::TaskStatus to) {
  switch (to) {
    case sim::TaskStatus::completed: return EventType::TASK_COMPLETED;
    case sim::TaskStatus::timedOut: return EventType::TASK_TIMEOUT;
    case sim::TaskStatus::aborted: return EventType::TASK_ABORTED;
    default: return EventType::TASK_STARTED;
  }
}

/// Thrown inside handlers to turn a bad payload into an error event.
struct BadPayload {
  std::string message;
};

std::string need_string(const json& payload, const char* key) {
  auto it = payload.find(key);
  if (it == payload.end() || !it->is_string()) throw BadPayload{std::string("payload.") + key + " must be a string"};
  return it->get<std::string>();
}

std::optional<std::string> opt_string(const json& payload, const char* key) {
  auto it = payload.find(key);
  if (it == payload.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw BadPayload{std::string("payload.") + key + " must be a string"};
  return it->get<std::string>();
}

}  // namespace

Session::Session(std::shared_ptr<const CompiledScenario> scenario, SessionConfig config, sim::World world,
                 DeliveryMode mode)
    : scenario_(std::move(scenario)),
      config_(std::move(config)),
      world_(std::move(world)),
      explainer_(scenario_, explain::Explainer::Options{config_.sessionId, mode, config_.params.userContext,
                                                        config_.engine}),
      mode_(mode),
      last_activity_(config_.steadyNow()) {}

std::shared_ptr<Session> Session::start(std::shared_ptr<const CompiledScenario> scenario, SessionConfig config) {
  if (!config.storage) throw std::invalid_argument("session needs a storage driver");
  if (!config.wallTime) config.wallTime = [](std::int64_t) { return log::iso8601_utc(0); };
  if (!config.steadyNow) config.steadyNow = [] { return SteadyClock::now(); };
  try {
    check_against(config.params, *scenario);
  } catch (const ContextParamError& e) {
    throw SessionError(SessionError::Kind::bad_request, e.what());
  }
  DeliveryMode mode = config.params.deliveryMode.value_or(scenario->spec().explanationConfig.defaultDeliveryMode);
  std::optional<std::pair<sim::World, sim::StepResult>> init;
  try {
    init.emplace(sim::World::init(scenario, config.params.contextVars, config.cascadeDepthLimit));
  } catch (const sim::SimulationError& e) {
    throw SessionError(SessionError::Kind::bad_request, e.what());
  }
  std::shared_ptr<Session> s(new Session(scenario, std::move(config), std::move(init->first), mode));

  std::lock_guard lock(s->mu_);
  json context = json::object();
  for (const auto& [k, v] : s->config_.params.contextVars) context[k] = shine::to_json(v);
  s->log(EventType::SESSION_START, {{"scenarioId", s->scenario_id()},
                                    {"participantId", s->config_.participantId},
                                    {"deliveryMode", to_string(mode)},
                                    {"context", std::move(context)},
                                    {"userContext", s->config_.params.userContext},
                                    {"cascadeDepthLimit", s->world_.cascade_depth_limit()}});
  Events discarded;
  s->absorb(init->second, discarded);
  s->created_at_ = s->config_.wallTime(0);
  s->config_.storage->put_session(
      {s->id(), s->scenario_id(), s->config_.participantId, "active", s->created_at_, json()});
  return s;
}

// ---------------------------------------------------------------------------
// Logging and emission

std::int64_t Session::log(EventType type, json payload) {
  log::LogEvent e{config_.sessionId, seq_ + 1, row_time_, config_.wallTime(row_time_), type, std::move(payload)};
  config_.storage->append(e);
  return ++seq_;
}

void Session::emit(Events& out, const char* type, std::int64_t seq, json payload) {
  out.push_back(json{{"type", type}, {"sessionId", config_.sessionId}, {"seq", seq}, {"payload", std::move(payload)}});
}

void Session::flush(const Events& out, std::size_t from) {
  if (!sink_) return;
  for (std::size_t i = from; i < out.size(); ++i) {
    sink_(out[i]);
    ++emitted_;
  }
}

void Session::fail(Events& out, const std::string& code, const std::string& message, const json& clientSeq) {
  json payload{{"code", code}, {"message", message}};
  if (!clientSeq.is_null()) payload["clientSeq"] = clientSeq;
  ++counts_.errors;
  std::int64_t seq = status_ == SessionStatus::active ? log(EventType::ERROR, payload) : seq_;
  emit(out, wire::kError, seq, std::move(payload));
}

// ---------------------------------------------------------------------------
// Pipeline

json Session::mutation_cause_json(const sim::MutationCause& c) const {
  const auto& spec = scenario_->spec();
  return std::visit(
      [&](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, sim::cause::UserInteraction>) {
          return {{"type", "userInteraction"}, {"logSeq", m.sessionEventId}};
        } else if constexpr (std::is_same_v<T, sim::cause::RuleFired>) {
          json j{{"type", "ruleFired"}, {"ruleId", spec.rules[m.rule].id}, {"depth", m.depth}};
          if (m.truncated) j["truncated"] = true;
          return j;
        } else if constexpr (std::is_same_v<T, sim::cause::TriggerFired>) {
          return {{"type", "triggerFired"}, {"triggerId", spec.triggers[m.trigger].id}};
        } else {
          return {{"type", "sessionInit"}};
        }
      },
      c);
}

json Session::change_json(const sim::StateDelta& d, std::int64_t logSeq) const {
  json j{{"target", world_.target_name(d.target)},
         {"oldValue", shine::to_json(d.oldValue)},
         {"newValue", shine::to_json(d.newValue)},
         {"cause", mutation_cause_json(d.cause)},
         {"logSeq", logSeq}};
  if (const auto* t = std::get_if<TargetIndex>(&d.target)) {
    j["deviceId"] = scenario_->spec().devices[t->device].id;
    j["property"] = scenario_->property(*t).name;
  } else {
    j["context"] = scenario_->context_names()[std::get<sim::ContextIndex>(d.target).index];
  }
  return j;
}

void Session::advance_locked(std::int64_t to, Events& out) {
  if (to <= world_.clock_ms()) return;
  // Hop through each due instant so rows carry the time they happened at and
  // explanations render the state of that instant.
  while (auto next = world_.next_time_point()) {
    if (*next > to) break;
    row_time_ = std::max(row_time_, *next);
    absorb(world_.advance_clock(*next), out);
  }
  absorb(world_.advance_clock(to), out);
}

void Session::live_advance(Events& out) {
  if (config_.virtualNow) advance_locked(config_.virtualNow(), out);
}

void Session::absorb(const sim::StepResult& step, Events& out) {
  const auto& spec = scenario_->spec();
  json changes = json::array();
  json rootCause;
  std::int64_t lastChangeSeq = 0;
  std::vector<std::pair<explain::ExplanationCause, std::vector<std::string>>> causes;

  auto add_changes = [&](const std::vector<sim::StateDelta>& deltas, std::int64_t seq, json& rowChanges) {
    for (const auto& d : deltas) {
      json c = change_json(d, seq);
      rowChanges.push_back({{"target", c["target"]}, {"oldValue", c["oldValue"]}, {"newValue", c["newValue"]}});
      if (rootCause.is_null()) rootCause = c["cause"];
      changes.push_back(std::move(c));
      lastChangeSeq = seq;
    }
  };
  auto flush_changes = [&] {
    if (changes.empty()) return;
    emit(out, wire::kStateUpdate, lastChangeSeq,
         {{"full", false}, {"changes", std::move(changes)}, {"cause", std::move(rootCause)}});
    changes = json::array();
    rootCause = json();
  };

  for (const auto& entry : step.trace) {
    if (const auto* ic = std::get_if<sim::trace::InteractionCommitted>(&entry)) {
      // The DEVICE_INTERACTION row was written by the caller with this seq.
      if (ic->delta) {
        json ignored = json::array();
        add_changes({*ic->delta}, seq_, ignored);
      }
    } else if (const auto* rf = std::get_if<sim::trace::RuleFired>(&entry)) {
      const auto& rule = spec.rules[rf->rule];
      bool truncated = std::any_of(rf->deltas.begin(), rf->deltas.end(), [](const auto& d) {
        const auto* c = std::get_if<sim::cause::RuleFired>(&d.cause);
        return c && c->truncated;
      });
      json rowChanges = json::array();
      json payload{{"ruleId", rule.id}, {"depth", rf->depth}};
      if (truncated) payload["truncated"] = true;
      std::int64_t seq = seq_ + 1;
      add_changes(rf->deltas, seq, rowChanges);
      payload["changes"] = std::move(rowChanges);
      log(EventType::RULE_FIRED, std::move(payload));
      std::vector<std::string> devices;
      for (const auto& a : rule.actions) devices.push_back(a.deviceId);
      causes.emplace_back(explain::cause::RuleFired{rule.id}, std::move(devices));
    } else if (const auto* ct = std::get_if<sim::trace::CascadeTruncated>(&entry)) {
      json pending = json::array();
      for (auto r : ct->pending) pending.push_back(spec.rules[r].id);
      log(EventType::CASCADE_TRUNCATED, {{"depth", ct->depth}, {"pendingRules", std::move(pending)}});
    } else if (const auto* tf = std::get_if<sim::trace::TriggerFired>(&entry)) {
      const auto& trig = spec.triggers[tf->trigger];
      row_time_ = std::max(row_time_, tf->atMs);
      json rowChanges = json::array();
      std::int64_t seq = seq_ + 1;
      add_changes(tf->deltas, seq, rowChanges);
      log(EventType::TRIGGER_FIRED, {{"triggerId", trig.id}, {"atMs", tf->atMs}, {"changes", std::move(rowChanges)}});
      std::vector<std::string> devices;
      for (const auto& e : trig.effects) {
        if (const auto* a = std::get_if<ActionSpec>(&e)) devices.push_back(a->deviceId);
      }
      causes.emplace_back(explain::cause::TriggerFired{trig.id}, std::move(devices));
    } else if (const auto* tc = std::get_if<sim::trace::TaskChanged>(&entry)) {
      flush_changes();
      row_time_ = std::max(row_time_, tc->atMs);
      const auto& task = spec.tasks[tc->task];
      json payload{{"taskId", task.id}, {"from", to_string(tc->from)}, {"to", to_string(tc->to)}, {"atMs", tc->atMs}};
      std::int64_t seq = log(task_event(tc->to), payload);
      payload["description"] = task.description;
      emit(out, wire::kTaskUpdate, seq, std::move(payload));
    }
  }
  flush_changes();
  row_time_ = std::max(row_time_, world_.clock_ms());

  if (causes.empty()) return;
  auto snap = world_.snapshot();
  for (auto& [cause, devices] : causes) {
    if (auto created = explainer_.explain(cause, devices, snap)) present(*created, out, false);
  }
}

void Session::present(const explain::Created& created, Events& out, bool force) {
  const auto& inst = *created.instance;
  ++counts_.explanations;
  if (created.external && created.external->fellBack()) {
    log(EventType::EXTERNAL_ENGINE_FALLBACK, {{"instanceId", inst.instanceId},
                                              {"specId", inst.specId},
                                              {"reason", explain::to_string(created.external->status)},
                                              {"detail", created.external->detail},
                                              {"latencyMs", created.external->latencyMs}});
  }
  bool sendNow = force || created.decision.sendNow;
  json payload = explain::to_json(inst);
  payload["sendNow"] = sendNow;
  payload["matched"] = created.matched;
  if (created.external) {
    payload["engine"] = {{"status", explain::to_string(created.external->status)},
                         {"latencyMs", created.external->latencyMs}};
  }
  std::int64_t seq = log(EventType::EXPLANATION_CREATED, std::move(payload));
  if (sendNow) {
    if (!ever_attached_ && !force) {
      awaiting_attach_.push_back(inst.instanceId);
    } else {
      deliver(inst.instanceId, out);
    }
  } else if (created.decision.notifyAvailability) {
    emit(out, wire::kExplanationAvailable, seq,
         {{"instanceId", inst.instanceId}, {"devices", inst.devices}, {"cause", explain::to_json(inst.cause)}});
  }
}

void Session::deliver(const std::string& instanceId, Events& out) {
  const auto& inst = explainer_.mark_delivered(instanceId, world_.clock_ms());
  ++counts_.delivered;
  std::int64_t seq = log(EventType::EXPLANATION_DELIVERED, {{"instanceId", instanceId}});
  json payload = explain::to_json(inst);
  payload["chatEnabled"] = mode_ == DeliveryMode::interactive;
  emit(out, wire::kExplanation, seq, std::move(payload));
}

// ---------------------------------------------------------------------------
// Client events

Session::Attachment Session::attach(Sink sink) {
  std::lock_guard lock(mu_);
  Attachment a;
  a.generation = ++generation_;
  sink_ = std::move(sink);
  emitted_ = 0;
  ever_attached_ = true;
  json full = state_locked();
  full["full"] = true;
  emit(a.events, wire::kStateUpdate, seq_, std::move(full));
  if (status_ == SessionStatus::active) {
    auto waiting = std::move(awaiting_attach_);
    awaiting_attach_.clear();
    for (const auto& id : waiting) deliver(id, a.events);
  }
  flush(a.events, 0);
  return a;
}

void Session::detach(std::uint64_t generation) {
  std::lock_guard lock(mu_);
  if (generation == generation_) sink_ = nullptr;
}

Session::Events Session::handle(const json& envelope) {
  std::lock_guard lock(mu_);
  ++handled_;
  Events out;
  json clientSeq;
  if (envelope.is_object()) {
    if (auto it = envelope.find("seq"); it != envelope.end()) clientSeq = *it;
  }
  if (status_ != SessionStatus::active) {
    fail(out, "session_closed", "session is " + std::string(to_string(status_)), clientSeq);
    flush(out, 0);
    return out;
  }
  last_activity_ = config_.steadyNow();
  live_advance(out);

  auto reject = [&](const std::string& msg) { fail(out, "bad_request", msg, clientSeq); };
  if (!envelope.is_object()) {
    reject("event must be a JSON object");
  } else if (!envelope.contains("type") || !envelope["type"].is_string()) {
    reject("event.type must be a string");
  } else if (!clientSeq.is_number_integer()) {
    reject("event.seq must be an integer");
  } else if (envelope.contains("sessionId") && envelope["sessionId"] != config_.sessionId) {
    reject("event.sessionId does not match this session");
  } else if (!envelope.contains("payload") || !envelope["payload"].is_object()) {
    reject("event.payload must be an object");
  } else {
    const std::string type = envelope["type"].get<std::string>();
    const json& payload = envelope["payload"];
    try {
      if (type == "device_interaction") {
        on_interaction(payload, clientSeq, out);
      } else if (type == "explanation_request") {
        on_request(payload, clientSeq, out);
      } else if (type == "explanation_query") {
        on_query(payload, clientSeq, out);
      } else if (type == "explanation_rating") {
        on_rating(payload, clientSeq, out);
      } else if (type == "client_telemetry") {
        ++counts_.telemetry;
        log(EventType::CLIENT_TELEMETRY, {{"clientSeq", clientSeq}, {"data", payload}});
      } else if (type == "abort_task") {
        on_abort(payload, clientSeq, out);
      } else {
        fail(out, "unknown_type", "unknown event type '" + type + "'", clientSeq);
      }
    } catch (const BadPayload& e) {
      reject(e.message);
    } catch (const sim::SimulationError& e) {
      fail(out, std::string(error_code(e.kind())), e.what(), clientSeq);
    } catch (const explain::ExplanationError& e) {
      fail(out, std::string(error_code(e.kind())), e.what(), clientSeq);
    }
  }
  flush(out, 0);
  return out;
}

void Session::on_interaction(const json& payload, const json& clientSeq, Events& out) {
  std::string device = need_string(payload, "deviceId");
  std::string property = need_string(payload, "property");
  Literal value;
  auto vit = payload.find("value");
  if (vit == payload.end() || !from_json(*vit, value)) throw BadPayload{"payload.value must be a scalar"};

  // Throws before touching the world on a bad target or value.
  auto outcome = world_.apply_interaction(device, property, value, seq_ + 1);
  ++counts_.interactions;
  const char* verdict = outcome.blocked ? "blocked" : outcome.step.deltas().empty() ? "noop" : "committed";
  log(EventType::DEVICE_INTERACTION, {{"deviceId", device},
                                      {"property", property},
                                      {"value", shine::to_json(value)},
                                      {"outcome", verdict},
                                      {"clientSeq", clientSeq}});
  if (!outcome.blocked) {
    absorb(outcome.step, out);
    return;
  }
  ++counts_.blocked;
  const auto& rule = scenario_->spec().rules[*outcome.blockingRule];
  json blocked{{"ruleId", rule.id}, {"deviceId", device}, {"property", property},
               {"attemptedValue", shine::to_json(value)}};
  if (outcome.explanationId) blocked["explanationId"] = *outcome.explanationId;
  std::int64_t seq = log(EventType::INTERACTION_BLOCKED, blocked);
  emit(out, wire::kInteractionBlocked, seq, std::move(blocked));
  explain::cause::BlockedInteraction cause{rule.id, device, property, value};
  if (auto created = explainer_.explain(cause, {device}, world_.snapshot())) present(*created, out, false);
}

void Session::on_request(const json& payload, const json& clientSeq, Events& out) {
  auto instanceId = opt_string(payload, "instanceId");
  auto deviceId = opt_string(payload, "deviceId");
  json row{{"clientSeq", clientSeq}};
  if (instanceId) row["instanceId"] = *instanceId;
  if (deviceId) row["deviceId"] = *deviceId;

  const explain::ExplanationInstance* target = nullptr;
  if (instanceId) {
    target = explainer_.find(*instanceId);
    if (!target) {
      throw explain::ExplanationError(explain::ExplanationError::Kind::unknown_instance,
                                      "unknown explanation " + *instanceId);
    }
  } else {
    target = explainer_.latest_held(deviceId);
  }

  if (target) {
    bool redeliver = target->deliveredAtMs.has_value();
    row["resolved"] = target->instanceId;
    row["via"] = redeliver ? "redeliver" : "held";
    std::int64_t seq = log(EventType::EXPLANATION_REQUESTED, std::move(row));
    if (!redeliver) {
      std::erase(awaiting_attach_, target->instanceId);
      deliver(target->instanceId, out);
    } else {
      json again = explain::to_json(*target);
      again["chatEnabled"] = mode_ == DeliveryMode::interactive;
      emit(out, wire::kExplanation, seq, std::move(again));
    }
    return;
  }

  explain::ExplanationCause cause = explain::cause::UserRequest{deviceId};
  if (!explainer_.select(cause)) {
    row["via"] = "none";
    log(EventType::EXPLANATION_REQUESTED, std::move(row));
    fail(out, "no_explanation", "no explanation is available" + (deviceId ? " for " + *deviceId : std::string()),
         clientSeq);
    return;
  }
  row["via"] = "userRequest";
  log(EventType::EXPLANATION_REQUESTED, std::move(row));
  std::vector<std::string> devices;
  if (deviceId) devices.push_back(*deviceId);
  if (auto created = explainer_.explain(cause, devices, world_.snapshot())) present(*created, out, true);
}

void Session::on_query(const json& payload, const json& clientSeq, Events& out) {
  std::string text = need_string(payload, "text");
  auto parent = opt_string(payload, "parentInstanceId");
  auto created = explainer_.query(text, parent, world_.snapshot());
  ++counts_.queries;
  const auto& inst = *created.instance;
  log(EventType::EXPLANATION_QUERY, {{"text", text},
                                     {"parentInstanceId", inst.parentInstanceId.value_or("")},
                                     {"matched", created.matched},
                                     {"specId", inst.specId},
                                     {"clientSeq", clientSeq}});
  present(created, out, true);
}

void Session::on_rating(const json& payload, const json& clientSeq, Events& out) {
  (void)out;
  std::string instanceId = need_string(payload, "instanceId");
  auto value = explain::rating_from_string(need_string(payload, "value"));
  if (!value) throw BadPayload{"payload.value must be \"up\" or \"down\""};
  auto result = explainer_.rate(instanceId, *value, world_.clock_ms());
  ++counts_.ratings;
  json row{{"instanceId", instanceId}, {"value", explain::to_string(*value)}, {"clientSeq", clientSeq}};
  if (result.previous) row["previous"] = explain::to_string(*result.previous);
  row["revision"] = result.previous.has_value();
  log(EventType::EXPLANATION_RATED, std::move(row));
}

void Session::on_abort(const json& payload, const json& clientSeq, Events& out) {
  (void)clientSeq;
  std::string taskId = need_string(payload, "taskId");
  absorb(world_.abort_task(taskId), out);
}

// ---------------------------------------------------------------------------
// Time and lifecycle

Session::Events Session::advance_to(std::int64_t clockMs) {
  std::lock_guard lock(mu_);
  Events out;
  if (status_ != SessionStatus::active) return out;
  if (clockMs < world_.clock_ms()) {
    throw sim::SimulationError(sim::SimulationError::Kind::clock_regression, "virtual clock cannot move backwards");
  }
  advance_locked(clockMs, out);
  flush(out, 0);
  return out;
}

Session::Events Session::tick() {
  std::lock_guard lock(mu_);
  Events out;
  if (status_ != SessionStatus::active) return out;
  live_advance(out);
  flush(out, 0);
  return out;
}

void Session::end(const std::string& reason, Events& out) {
  json summary = summary_locked();
  std::int64_t seq = log(EventType::SESSION_END, {{"reason", reason}, {"summary", summary}});
  emit(out, wire::kSessionEnd, seq, {{"reason", reason}, {"summary", summary}});
  final_summary_ = summary;
  config_.storage->put_session(
      {id(), scenario_id(), config_.participantId, std::string(to_string(status_)), created_at_, summary});
}

json Session::complete(Events* events) {
  std::lock_guard lock(mu_);
  if (status_ == SessionStatus::completed) return *final_summary_;
  if (status_ == SessionStatus::expired) {
    throw SessionError(SessionError::Kind::conflict, "session " + id() + " has expired");
  }
  Events out;
  live_advance(out);
  status_ = SessionStatus::completed;
  end("completed", out);
  flush(out, 0);
  if (events) *events = std::move(out);
  return *final_summary_;
}

bool Session::expire(Events* events) {
  std::lock_guard lock(mu_);
  if (status_ != SessionStatus::active) return false;
  Events out;
  live_advance(out);
  status_ = SessionStatus::expired;
  end("expired", out);
  flush(out, 0);
  if (events) *events = std::move(out);
  return true;
}

bool Session::idle_for(SteadyClock::duration limit) const {
  std::lock_guard lock(mu_);
  return config_.steadyNow() - last_activity_ >= limit;
}

// ---------------------------------------------------------------------------
// Views

json Session::state_locked() const {
  json j = sim::to_json(world_.snapshot());
  j["sessionId"] = id();
  j["scenarioId"] = scenario_id();
  j["participantId"] = config_.participantId;
  j["status"] = to_string(status_);
  j["deliveryMode"] = to_string(mode_);
  j["seq"] = seq_;
  json explanations = json::array();
  for (const auto& inst : explainer_.instances()) {
    json e{{"instanceId", inst.instanceId}, {"specId", inst.specId}, {"source", explain::to_string(inst.source)},
           {"delivered", inst.deliveredAtMs.has_value()}};
    if (inst.deliveredAtMs) {
      e["text"] = inst.text;
      e["deliveredAtMs"] = *inst.deliveredAtMs;
    }
    if (auto r = explainer_.ratings().find(inst.instanceId); r != explainer_.ratings().end()) {
      e["rating"] = explain::to_string(r->second.value);
    }
    explanations.push_back(std::move(e));
  }
  j["explanations"] = std::move(explanations);
  return j;
}

json Session::summary_locked() const {
  json tasks = json::array();
  const auto& specs = scenario_->spec().tasks;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    json t = sim::to_json(world_.tasks()[i]);
    t["taskId"] = specs[i].id;
    tasks.push_back(std::move(t));
  }
  return {{"sessionId", id()},
          {"scenarioId", scenario_id()},
          {"participantId", config_.participantId},
          {"status", to_string(status_)},
          {"deliveryMode", to_string(mode_)},
          {"durationMs", world_.clock_ms()},
          {"tasks", std::move(tasks)},
          {"counts",
           {{"interactions", counts_.interactions},
            {"blocked", counts_.blocked},
            {"explanations", counts_.explanations},
            {"explanationsDelivered", counts_.delivered},
            {"queries", counts_.queries},
            {"ratings", counts_.ratings},
            {"telemetry", counts_.telemetry},
            {"errors", counts_.errors}}}};
}

json Session::state() const {
  std::lock_guard lock(mu_);
  return state_locked();
}

sim::StateSnapshot Session::snapshot() const {
  std::lock_guard lock(mu_);
  return world_.snapshot();
}

json Session::summary() const {
  std::lock_guard lock(mu_);
  return final_summary_ ? *final_summary_ : summary_locked();
}

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  return status_;
}

std::int64_t Session::last_seq() const {
  std::lock_guard lock(mu_);
  return seq_;
}

std::int64_t Session::clock_ms() const {
  std::lock_guard lock(mu_);
  return world_.clock_ms();
}

std::uint64_t Session::handled_count() const {
  std::lock_guard lock(mu_);
  return handled_;
}

std::uint64_t Session::emitted_count() const {
  std::lock_guard lock(mu_);
  return emitted_;
}

}  // namespace shine::session
