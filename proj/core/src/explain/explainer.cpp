#include "shine/explain/explainer.hpp"

#include "shine/explain/render.hpp"

#include <algorithm>
#include <chrono>

namespace shine::explain {

using nlohmann::json;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::internal: return "internal";
    case Source::external: return "external";
    case Source::externalFallback: return "externalFallback";
  }
  return "?";
}

std::string_view to_string(RatingValue v) { return v == RatingValue::up ? "up" : "down"; }

std::optional<RatingValue> rating_from_string(std::string_view s) {
  if (s == "up") return RatingValue::up;
  if (s == "down") return RatingValue::down;
  return std::nullopt;
}

json to_json(const ExplanationInstance& e) {
  json j{{"instanceId", e.instanceId},
         {"specId", e.specId},
         {"text", e.text},
         {"mode", to_string(e.mode)},
         {"cause", to_json(e.cause)},
         {"createdAtMs", e.createdAtMs},
         {"source", to_string(e.source)}};
  if (e.deliveredAtMs) j["deliveredAtMs"] = *e.deliveredAtMs;
  if (e.parentInstanceId) j["parentInstanceId"] = *e.parentInstanceId;
  if (!e.followUpHints.empty()) j["followUpHints"] = e.followUpHints;
  return j;
}

DeliveryDecision decide_delivery(DeliveryMode mode, const ExplanationConfig& config) {
  switch (mode) {
    case DeliveryMode::push: return {true, false, false};
    case DeliveryMode::pull: return {false, config.notifyAvailability, false};
    case DeliveryMode::interactive: return {true, false, true};
  }
  return {};
}

Explainer::Explainer(std::shared_ptr<const CompiledScenario> scenario, Options options)
    : scenario_(std::move(scenario)), options_(std::move(options)) {}

const ExplanationSpec* Explainer::select(const ExplanationCause& cause) const {
  const ScenarioSpec& spec = scenario_->spec();
  auto attached = [&](const std::optional<std::string>& id) -> const ExplanationSpec* {
    return id ? scenario_->explanation(*id) : nullptr;
  };
  if (const auto* b = std::get_if<cause::BlockedInteraction>(&cause)) {
    auto r = scenario_->rule_index(b->ruleId);
    return r ? attached(spec.rules[*r].explanationId) : nullptr;
  }
  if (const auto* f = std::get_if<cause::RuleFired>(&cause)) {
    auto r = scenario_->rule_index(f->ruleId);
    return r ? attached(spec.rules[*r].explanationId) : nullptr;
  }
  if (const auto* t = std::get_if<cause::TriggerFired>(&cause)) {
    auto i = scenario_->trigger_index(t->triggerId);
    return i ? attached(spec.triggers[*i].explanationId) : nullptr;
  }
  if (const auto* u = std::get_if<cause::UserRequest>(&cause)) {
    for (auto it = recent_.rbegin(); it != recent_.rend(); ++it) {
      if (!u->deviceId || std::find(it->devices.begin(), it->devices.end(), *u->deviceId) != it->devices.end()) {
        return scenario_->explanation(it->specId);
      }
    }
  }
  return nullptr;
}

json Explainer::engine_request(const ExplanationCause& cause, const sim::StateSnapshot& state) const {
  json devices = json::object();
  for (const auto& [id, props] : state.devices) {
    json p = json::object();
    for (const auto& [name, v] : props) p[name] = shine::to_json(v);
    devices[id] = std::move(p);
  }
  json context = json::object();
  for (const auto& [name, v] : state.context) context[name] = shine::to_json(v);
  return json{{"sessionId", options_.sessionId},
              {"cause", to_json(cause)},
              {"state", {{"devices", devices}, {"context", context}, {"clockMs", state.clockMs}}},
              {"userContext", options_.userContext}};
}

Created Explainer::create(const ExplanationSpec& spec, ExplanationCause cause, std::vector<std::string> devices,
                          const sim::StateSnapshot& state, const ExplanationInstance* parent) {
  ExplanationInstance inst;
  inst.instanceId = "exp-" + std::to_string(instances_.size() + 1);
  inst.specId = spec.id;
  inst.mode = options_.mode;
  inst.createdAtMs = state.clockMs;
  inst.devices = std::move(devices);
  if (parent) {
    inst.parentInstanceId = parent->instanceId;
    inst.chain = parent->chain;
  }
  inst.chain.push_back(spec.id);

  Created out;
  const ExplanationConfig& config = scenario_->spec().explanationConfig;
  if (spec.external && config.engineEndpoint && options_.engine) {
    auto reply = options_.engine->exchange(engine_request(cause, state),
                                           std::chrono::milliseconds(config.engineTimeoutMs));
    ExternalExchange ex{reply.status, reply.detail, reply.latencyMs};
    if (reply.status == EngineReply::Status::ok && !reply.text.empty()) {
      inst.text = std::move(reply.text);
      inst.followUpHints = std::move(reply.followUpHints);
      inst.source = Source::external;
    } else {
      if (ex.status == EngineReply::Status::ok) {
        ex.status = EngineReply::Status::invalid_response;
        ex.detail = "empty text";
      }
      inst.source = Source::externalFallback;
    }
    out.external = std::move(ex);
  }
  if (inst.text.empty()) inst.text = render_template(spec, state, scenario_->spec());
  inst.cause = std::move(cause);

  by_id_[inst.instanceId] = instances_.size();
  instances_.push_back(std::move(inst));
  out.instance = &instances_.back();
  out.decision = decide_delivery(options_.mode, config);
  return out;
}

std::optional<Created> Explainer::explain(const ExplanationCause& cause, const std::vector<std::string>& devices,
                                          const sim::StateSnapshot& state) {
  const ExplanationSpec* spec = select(cause);
  if (!spec) return std::nullopt;
  std::vector<std::string> touched = devices;
  if (const auto* u = std::get_if<cause::UserRequest>(&cause); u && u->deviceId && touched.empty()) {
    touched.push_back(*u->deviceId);
  }
  if (!std::holds_alternative<cause::UserRequest>(cause)) recent_.push_back({spec->id, touched});
  return create(*spec, cause, std::move(touched), state, nullptr);
}

Created Explainer::query(std::string_view text, const std::optional<std::string>& parentId,
                         const sim::StateSnapshot& state) {
  if (options_.mode != DeliveryMode::interactive) {
    throw ExplanationError(ExplanationError::Kind::not_interactive, "follow-up queries need interactive mode");
  }
  const ExplanationInstance* parent = nullptr;
  if (parentId) {
    parent = find(*parentId);
    if (!parent) throw ExplanationError(ExplanationError::Kind::unknown_instance, "unknown explanation " + *parentId);
  } else {
    parent = latest_delivered();
    if (!parent) throw ExplanationError(ExplanationError::Kind::unknown_instance, "no explanation to follow up on");
  }
  cause::FollowUpQuery cause{parent->instanceId, std::string(text)};
  const ExplanationSpec* parent_spec = scenario_->explanation(parent->specId);
  std::optional<std::size_t> hit;
  if (parent_spec) hit = match_follow_up(*parent_spec, text, parent->chain);
  if (hit) {
    const ExplanationSpec* next = scenario_->explanation(parent_spec->followUps[*hit].explanationId);
    if (next) return create(*next, cause, parent->devices, state, parent);
  }

  ExplanationSpec fallback{std::string(kUnmatchedSpecId), std::string(kNoFurtherExplanation), {}, false};
  Created out = create(fallback, cause, parent->devices, state, parent);
  out.matched = false;
  return out;
}

const ExplanationInstance& Explainer::mark_delivered(const std::string& instanceId, std::int64_t atMs) {
  auto it = by_id_.find(instanceId);
  if (it == by_id_.end()) {
    throw ExplanationError(ExplanationError::Kind::unknown_instance, "unknown explanation " + instanceId);
  }
  ExplanationInstance& inst = instances_[it->second];
  if (!inst.deliveredAtMs) inst.deliveredAtMs = std::max(atMs, inst.createdAtMs);
  return inst;
}

const ExplanationInstance* Explainer::latest_held(const std::optional<std::string>& deviceId) const {
  for (auto it = instances_.rbegin(); it != instances_.rend(); ++it) {
    if (it->deliveredAtMs) continue;
    if (!deviceId || std::find(it->devices.begin(), it->devices.end(), *deviceId) != it->devices.end()) return &*it;
  }
  return nullptr;
}

const ExplanationInstance* Explainer::latest_delivered() const {
  for (auto it = instances_.rbegin(); it != instances_.rend(); ++it) {
    if (it->deliveredAtMs) return &*it;
  }
  return nullptr;
}

RatingResult Explainer::rate(const std::string& instanceId, RatingValue value, std::int64_t atMs) {
  const ExplanationInstance* inst = find(instanceId);
  if (!inst) throw ExplanationError(ExplanationError::Kind::unknown_instance, "unknown explanation " + instanceId);
  if (!inst->deliveredAtMs) {
    throw ExplanationError(ExplanationError::Kind::not_delivered, "explanation " + instanceId + " was not delivered");
  }
  RatingResult out{Rating{instanceId, value, atMs}, std::nullopt};
  auto [it, inserted] = ratings_.try_emplace(instanceId, out.rating);
  if (!inserted) {
    out.previous = it->second.value;
    it->second = out.rating;
  }
  return out;
}

const ExplanationInstance* Explainer::find(std::string_view instanceId) const {
  auto it = by_id_.find(instanceId);
  return it == by_id_.end() ? nullptr : &instances_[it->second];
}

}  // namespace shine::explain
