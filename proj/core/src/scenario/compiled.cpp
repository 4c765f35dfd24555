#include "shine/scenario/compiled.hpp"

#include "shine/scenario/validate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shine {

std::int64_t seconds_to_ms(double seconds) { return std::llround(seconds * 1000.0); }

namespace {

template <typename Map>
std::optional<std::size_t> lookup(const Map& m, std::string_view key) {
  auto it = m.find(key);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

}  // namespace

std::optional<std::size_t> CompiledScenario::device_index(std::string_view id) const {
  return lookup(devices_, id);
}

std::optional<TargetIndex> CompiledScenario::target(std::string_view device, std::string_view prop) const {
  auto d = device_index(device);
  if (!d) return std::nullopt;
  auto p = lookup(properties_[*d], prop);
  if (!p) return std::nullopt;
  return TargetIndex{*d, *p};
}

std::optional<std::size_t> CompiledScenario::rule_index(std::string_view id) const {
  return lookup(rules_by_id_, id);
}

std::optional<std::size_t> CompiledScenario::trigger_index(std::string_view id) const {
  return lookup(triggers_by_id_, id);
}

std::optional<std::size_t> CompiledScenario::task_index(std::string_view id) const {
  return lookup(tasks_by_id_, id);
}

const ExplanationSpec* CompiledScenario::explanation(std::string_view id) const {
  auto i = lookup(explanations_by_id_, id);
  return i ? &spec_.explanations[*i] : nullptr;
}

std::optional<std::size_t> CompiledScenario::context_index(std::string_view name) const {
  return lookup(context_by_name_, name);
}

std::vector<std::size_t> CompiledScenario::triggers_for_interaction(std::size_t device) const {
  std::vector<std::size_t> out;
  for (auto t : interaction_triggers_) {
    const auto& ev = triggers_[t].eventDevice;
    if (!ev || *ev == device) out.push_back(t);
  }
  return out;
}

ValueTable CompiledScenario::initial_values() const {
  ValueTable v;
  v.devices.reserve(spec_.devices.size());
  for (const auto& d : spec_.devices) {
    auto& row = v.devices.emplace_back();
    for (const auto& p : d.properties) row.push_back(p.initial);
  }
  for (const auto& [_, value] : spec_.contextDefaults) v.context.push_back(value);
  return v;
}

std::shared_ptr<const CompiledScenario> compile(const ScenarioSpec& spec) {
  auto report = validate_scenario(spec);
  if (!report.ok) {
    const auto& first = *std::find_if(report.issues.begin(), report.issues.end(),
                                      [](const ValidationIssue& i) { return i.severity == Severity::error; });
    throw PreconditionError("cannot compile invalid scenario '" + spec.id + "': " + first.path + ": " +
                            first.message);
  }

  auto out = std::make_shared<CompiledScenario>();
  CompiledScenario& c = *out;
  c.spec_ = spec;
  const ScenarioSpec& s = c.spec_;

  for (std::size_t i = 0; i < s.devices.size(); ++i) {
    c.devices_.emplace(s.devices[i].id, i);
    auto& props = c.properties_.emplace_back();
    for (std::size_t p = 0; p < s.devices[i].properties.size(); ++p) {
      props.emplace(s.devices[i].properties[p].name, p);
    }
  }
  for (std::size_t i = 0; i < s.explanations.size(); ++i) c.explanations_by_id_.emplace(s.explanations[i].id, i);
  for (const auto& [name, _] : s.contextDefaults) {
    c.context_by_name_.emplace(name, c.context_names_.size());
    c.context_names_.push_back(name);
  }

  c.constraints_by_device_.resize(s.devices.size());
  for (std::size_t i = 0; i < s.rules.size(); ++i) {
    const auto& r = s.rules[i];
    c.rules_by_id_.emplace(r.id, i);
    CompiledRule cr;
    cr.index = i;
    cr.condition = compile_condition(r.condition, s);
    for (const auto& a : r.actions) cr.actions.push_back({*c.target(a.deviceId, a.property), a.value});
    for (const auto& b : r.blocks) cr.blocks.push_back({*c.target(b.deviceId, b.property), b.blockedValue});
    c.rules_.push_back(std::move(cr));
  }

  std::vector<std::size_t> order(s.rules.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.rules[a].priority < s.rules[b].priority; });
  for (auto i : order) {
    if (s.rules[i].kind == RuleKind::action) {
      c.action_order_.push_back(i);
    } else {
      std::vector<std::size_t> touched;
      for (const auto& b : c.rules_[i].blocks) touched.push_back(b.target.device);
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (auto d : touched) c.constraints_by_device_[d].push_back(i);
    }
  }

  for (std::size_t i = 0; i < s.triggers.size(); ++i) {
    const auto& t = s.triggers[i];
    c.triggers_by_id_.emplace(t.id, i);
    CompiledTrigger ct;
    ct.index = i;
    for (const auto& e : t.effects) {
      CompiledEffect ce;
      if (const auto* a = std::get_if<ActionSpec>(&e)) {
        ce.kind = CompiledEffect::Kind::device;
        ce.target = *c.target(a->deviceId, a->property);
        ce.value = a->value;
      } else {
        const auto& env = std::get<EnvironmentSet>(e);
        ce.kind = CompiledEffect::Kind::context;
        ce.context = *c.context_index(env.name);
        ce.value = env.value;
      }
      ct.effects.push_back(std::move(ce));
    }
    if (const auto* at = std::get_if<AtTime>(&t.when)) {
      ct.atMs = seconds_to_ms(at->seconds);
    } else {
      const auto& ev = std::get<AfterEvent>(t.when);
      if (ev.deviceId) ct.eventDevice = c.device_index(*ev.deviceId);
      ct.delayMs = seconds_to_ms(ev.delaySeconds);
      c.interaction_triggers_.push_back(i);
    }
    c.triggers_.push_back(std::move(ct));
  }

  for (std::size_t i = 0; i < s.tasks.size(); ++i) c.tasks_by_id_.emplace(s.tasks[i].id, i);
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    const auto& t = s.tasks[i];
    CompiledTask ct;
    ct.index = i;
    ct.goal = compile_condition(t.goal, s);
    if (t.timeoutSeconds) ct.timeoutMs = seconds_to_ms(*t.timeoutSeconds);
    if (t.dependsOn) ct.dependsOn = c.task_index(*t.dependsOn);
    c.tasks_.push_back(std::move(ct));
  }

  // Depth-first emission of dependencies; validation guarantees acyclicity.
  std::vector<bool> placed(s.tasks.size(), false);
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    std::vector<std::size_t> chain;
    for (std::optional<std::size_t> t = i; t && !placed[*t]; t = c.tasks_[*t].dependsOn) chain.push_back(*t);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      placed[*it] = true;
      c.task_order_.push_back(*it);
    }
  }
  return out;
}

}  // namespace shine
