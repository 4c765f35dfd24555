#include "shine/sim/world.hpp"

#include <algorithm>
#include <tuple>

namespace shine::sim {

std::vector<StateDelta> StepResult::deltas() const {
  std::vector<StateDelta> out;
  for (const auto& entry : trace) {
    if (const auto* i = std::get_if<trace::InteractionCommitted>(&entry)) {
      if (i->delta) out.push_back(*i->delta);
    } else if (const auto* r = std::get_if<trace::RuleFired>(&entry)) {
      out.insert(out.end(), r->deltas.begin(), r->deltas.end());
    } else if (const auto* t = std::get_if<trace::TriggerFired>(&entry)) {
      out.insert(out.end(), t->deltas.begin(), t->deltas.end());
    }
  }
  return out;
}

std::vector<trace::TaskChanged> StepResult::task_changes() const {
  std::vector<trace::TaskChanged> out;
  for (const auto& entry : trace) {
    if (const auto* t = std::get_if<trace::TaskChanged>(&entry)) out.push_back(*t);
  }
  return out;
}

std::pair<World, StepResult> World::init(std::shared_ptr<const CompiledScenario> scenario,
                                         const std::map<std::string, Literal>& context, int cascadeDepthLimit) {
  World w;
  w.scenario_ = std::move(scenario);
  const auto& sc = *w.scenario_;
  w.values_ = sc.initial_values();
  w.depth_limit_ = cascadeDepthLimit;
  for (const auto& [name, value] : context) {
    auto idx = sc.context_index(name);
    if (!idx) throw SimulationError(SimulationError::Kind::unknown_context, "unknown context variable '" + name + "'");
    if (kind_of(w.values_.context[*idx]) != kind_of(value)) {
      throw SimulationError(SimulationError::Kind::out_of_domain,
                            "context variable '" + name + "' expects a " +
                                std::string(to_string(kind_of(w.values_.context[*idx]))));
    }
    w.values_.context[*idx] = value;
  }
  w.tasks_.resize(sc.tasks().size());
  w.fired_.assign(sc.triggers().size(), false);

  StepResult out;
  for (const auto& t : sc.triggers()) {
    if (!t.atMs) continue;
    if (*t.atMs == 0) {
      w.fired_[t.index] = true;
      trace::TriggerFired entry{t.index, 0, {}};
      for (const auto& e : t.effects) {
        StateTarget target = e.kind == CompiledEffect::Kind::device ? StateTarget{e.target}
                                                                     : StateTarget{ContextIndex{e.context}};
        if (auto d = w.write(target, e.value, cause::TriggerFired{t.index})) entry.deltas.push_back(*d);
      }
      out.trace.emplace_back(std::move(entry));
    } else {
      w.schedule(t.index, *t.atMs);
    }
  }
  w.run_fixpoint(std::vector<bool>(sc.rules().size(), false), out);
  w.check_tasks_into(out);
  return {std::move(w), std::move(out)};
}

Literal& World::slot(const StateTarget& t) {
  if (const auto* d = std::get_if<TargetIndex>(&t)) return values_.devices[d->device][d->property];
  return values_.context[std::get<ContextIndex>(t).index];
}

std::optional<StateDelta> World::write(const StateTarget& t, const Literal& v, const MutationCause& c) {
  Literal& cur = slot(t);
  if (cur == v) return std::nullopt;
  StateDelta delta{t, cur, v, c};
  cur = v;
  return delta;
}

std::vector<bool> World::truths(const ValueTable& values) const {
  const auto& rules = scenario_->rules();
  std::vector<bool> out(rules.size(), false);
  for (auto r : scenario_->action_order()) out[r] = rules[r].condition.evaluate(values);
  return out;
}

void World::run_fixpoint(std::vector<bool> prior, StepResult& out) {
  const auto& rules = scenario_->rules();
  for (int depth = 1;; ++depth) {
    auto now = truths(values_);
    std::vector<std::size_t> firing;
    for (auto r : scenario_->action_order()) {
      if (now[r] && !prior[r]) firing.push_back(r);
    }
    if (firing.empty()) return;
    if (depth > depth_limit_) {
      for (auto& entry : out.trace) {
        auto* fired = std::get_if<trace::RuleFired>(&entry);
        if (!fired || fired->depth != depth_limit_) continue;
        for (auto& d : fired->deltas) {
          if (auto* c = std::get_if<cause::RuleFired>(&d.cause)) c->truncated = true;
        }
      }
      out.trace.emplace_back(trace::CascadeTruncated{depth_limit_, std::move(firing)});
      return;
    }
    for (auto r : firing) {
      trace::RuleFired entry{r, depth, {}};
      for (const auto& a : rules[r].actions) {
        if (auto d = write(a.target, a.value, cause::RuleFired{r, depth, false})) entry.deltas.push_back(*d);
      }
      out.trace.emplace_back(std::move(entry));
    }
    prior = std::move(now);
  }
}

StepResult World::evaluate_rules(const std::vector<StateDelta>& seeds) {
  StepResult out;
  if (seeds.empty()) return out;
  ValueTable before = values_;
  for (auto it = seeds.rbegin(); it != seeds.rend(); ++it) {
    if (const auto* d = std::get_if<TargetIndex>(&it->target)) {
      before.devices[d->device][d->property] = it->oldValue;
    } else {
      before.context[std::get<ContextIndex>(it->target).index] = it->oldValue;
    }
  }
  run_fixpoint(truths(before), out);
  return out;
}

InteractionOutcome World::apply_interaction(std::string_view device, std::string_view property,
                                            const Literal& value, std::int64_t sessionEventId) {
  auto target = scenario_->target(device, property);
  if (!target) {
    throw SimulationError(SimulationError::Kind::unknown_target,
                          "unknown device property '" + std::string(device) + "." + std::string(property) + "'");
  }
  const auto& prop = scenario_->property(*target);
  if (!prop.userWritable) {
    throw SimulationError(SimulationError::Kind::not_writable,
                          std::string(device) + "." + std::string(property) + " is not user-writable");
  }
  if (!prop.accepts(value)) {
    throw SimulationError(SimulationError::Kind::out_of_domain, "value " + format_literal(value) +
                                                                    " is outside the domain of " +
                                                                    std::string(device) + "." + std::string(property));
  }

  InteractionOutcome out;
  Literal& cur = values_.devices[target->device][target->property];
  if (cur == value) {
    out.step.trace.emplace_back(trace::InteractionCommitted{*target, std::nullopt});
    return out;
  }

  // Test constraints in the hypothetical post-state, then restore.
  Literal previous = cur;
  cur = value;
  std::optional<std::size_t> blocking;
  const auto& rules = scenario_->rules();
  for (auto r : scenario_->constraints_for(target->device)) {
    bool covers = std::any_of(rules[r].blocks.begin(), rules[r].blocks.end(), [&](const CompiledBlock& b) {
      return b.target == *target && (!b.blockedValue || *b.blockedValue == value);
    });
    if (covers && rules[r].condition.evaluate(values_)) {
      blocking = r;
      break;
    }
  }
  cur = previous;
  if (blocking) {
    out.blocked = true;
    out.blockingRule = blocking;
    out.explanationId = scenario_->spec().rules[*blocking].explanationId;
    return out;
  }

  auto prior = truths(values_);
  auto delta = write(*target, value, cause::UserInteraction{sessionEventId});
  out.step.trace.emplace_back(trace::InteractionCommitted{*target, delta});
  run_fixpoint(std::move(prior), out.step);
  check_tasks_into(out.step);

  const auto& spec_triggers = scenario_->spec().triggers;
  for (auto t : scenario_->triggers_for_interaction(target->device)) {
    if (spec_triggers[t].oneShot) {
      bool pending = std::any_of(pending_.begin(), pending_.end(), [&](const Pending& p) { return p.trigger == t; });
      if (fired_[t] || pending) continue;
    }
    schedule(t, clock_ + scenario_->triggers()[t].delayMs);
  }
  fire_due(out.step);
  return out;
}

void World::schedule(std::size_t trigger, std::int64_t deadline) {
  pending_.push_back(Pending{deadline, trigger, next_seq_++});
}

void World::fire_trigger(std::size_t trigger, StepResult& out) {
  const auto& spec = scenario_->spec().triggers[trigger];
  if (spec.oneShot && fired_[trigger]) return;
  fired_[trigger] = true;

  ValueTable before = values_;
  trace::TriggerFired entry{trigger, clock_, {}};
  for (const auto& e : scenario_->triggers()[trigger].effects) {
    StateTarget target =
        e.kind == CompiledEffect::Kind::device ? StateTarget{e.target} : StateTarget{ContextIndex{e.context}};
    if (auto d = write(target, e.value, cause::TriggerFired{trigger})) entry.deltas.push_back(*d);
  }
  bool changed = !entry.deltas.empty();
  out.trace.emplace_back(std::move(entry));
  if (changed) run_fixpoint(truths(before), out);
  check_tasks_into(out);
}

void World::fire_due(StepResult& out) {
  for (;;) {
    auto it = std::min_element(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) {
      return std::tie(a.deadline, a.trigger, a.seq) < std::tie(b.deadline, b.trigger, b.seq);
    });
    if (it == pending_.end() || it->deadline > clock_) return;
    auto trigger = it->trigger;
    pending_.erase(it);
    fire_trigger(trigger, out);
  }
}

std::optional<std::int64_t> World::next_time_point() const {
  std::optional<std::int64_t> next;
  auto consider = [&](std::int64_t t) {
    if (!next || t < *next) next = t;
  };
  for (const auto& p : pending_) consider(p.deadline);
  for (const auto& t : scenario_->tasks()) {
    const auto& st = tasks_[t.index];
    if (st.status == TaskStatus::active && t.timeoutMs) consider(*st.startedAtMs + *t.timeoutMs + 1);
  }
  return next;
}

StepResult World::advance_clock(std::int64_t toMs) {
  if (toMs < clock_) {
    throw SimulationError(SimulationError::Kind::clock_regression,
                          "clock cannot move backwards from " + std::to_string(clock_) + " to " + std::to_string(toMs));
  }
  StepResult out;
  for (;;) {
    auto next = next_time_point();
    if (!next || *next > toMs) break;
    clock_ = std::max(*next, clock_);
    fire_due(out);
    expire_tasks(out);
  }
  clock_ = toMs;
  return out;
}

void World::expire_tasks(StepResult& out) {
  for (auto i : scenario_->task_order()) {
    const auto& t = scenario_->tasks()[i];
    auto& st = tasks_[i];
    if (st.status != TaskStatus::active || !t.timeoutMs) continue;
    if (clock_ - *st.startedAtMs > *t.timeoutMs) {
      st.status = TaskStatus::timedOut;
      st.endedAtMs = clock_;
      out.trace.emplace_back(trace::TaskChanged{i, TaskStatus::active, TaskStatus::timedOut, clock_});
    }
  }
}

void World::check_tasks_into(StepResult& out) {
  const auto& tasks = scenario_->tasks();
  for (auto i : scenario_->task_order()) {
    auto& st = tasks_[i];
    if (st.status == TaskStatus::locked) {
      auto dep = tasks[i].dependsOn;
      if (!dep || tasks_[*dep].status == TaskStatus::completed) {
        st.status = TaskStatus::active;
        st.startedAtMs = clock_;
        out.trace.emplace_back(trace::TaskChanged{i, TaskStatus::locked, TaskStatus::active, clock_});
      }
    }
    if (st.status == TaskStatus::active && tasks[i].goal.evaluate(values_)) {
      st.status = TaskStatus::completed;
      st.endedAtMs = clock_;
      out.trace.emplace_back(trace::TaskChanged{i, TaskStatus::active, TaskStatus::completed, clock_});
    }
  }
}

StepResult World::check_tasks() {
  StepResult out;
  check_tasks_into(out);
  return out;
}

StepResult World::abort_task(std::string_view taskId) {
  auto idx = scenario_->task_index(taskId);
  if (!idx) throw SimulationError(SimulationError::Kind::unknown_task, "unknown task '" + std::string(taskId) + "'");
  const auto& spec = scenario_->spec().tasks[*idx];
  auto& st = tasks_[*idx];
  if (!spec.abortable) {
    throw SimulationError(SimulationError::Kind::task_not_abortable, "task '" + spec.id + "' is not abortable");
  }
  if (st.status != TaskStatus::active) {
    throw SimulationError(SimulationError::Kind::task_not_abortable,
                          "task '" + spec.id + "' is " + std::string(to_string(st.status)) + ", not active");
  }
  StepResult out;
  st.status = TaskStatus::aborted;
  st.endedAtMs = clock_;
  out.trace.emplace_back(trace::TaskChanged{*idx, TaskStatus::active, TaskStatus::aborted, clock_});
  check_tasks_into(out);
  return out;
}

StateSnapshot World::snapshot() const {
  const auto& spec = scenario_->spec();
  StateSnapshot s;
  for (std::size_t d = 0; d < spec.devices.size(); ++d) {
    auto& row = s.devices[spec.devices[d].id];
    for (std::size_t p = 0; p < spec.devices[d].properties.size(); ++p) {
      row[spec.devices[d].properties[p].name] = values_.devices[d][p];
    }
  }
  const auto& names = scenario_->context_names();
  for (std::size_t c = 0; c < names.size(); ++c) s.context[names[c]] = values_.context[c];
  s.clockMs = clock_;
  for (std::size_t t = 0; t < spec.tasks.size(); ++t) s.tasks[spec.tasks[t].id] = tasks_[t];
  return s;
}

std::string World::target_name(const StateTarget& t) const {
  if (const auto* d = std::get_if<TargetIndex>(&t)) {
    const auto& dev = scenario_->spec().devices[d->device];
    return dev.id + "." + dev.properties[d->property].name;
  }
  return "context." + scenario_->context_names()[std::get<ContextIndex>(t).index];
}

}  // namespace shine::sim
