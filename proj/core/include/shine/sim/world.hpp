#pragma once

#include "shine/scenario/compiled.hpp"
#include "shine/sim/snapshot.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace shine::sim {

inline constexpr int kDefaultCascadeDepthLimit = 16;

struct ContextIndex {
  std::size_t index = 0;
  bool operator==(const ContextIndex&) const = default;
};

using StateTarget = std::variant<TargetIndex, ContextIndex>;

namespace cause {
struct UserInteraction {
  std::int64_t sessionEventId = 0;
  bool operator==(const UserInteraction&) const = default;
};
struct RuleFired {
  std::size_t rule = 0;
  int depth = 1;
  bool truncated = false;  // set on the deepest pass when the cascade was cut off
  bool operator==(const RuleFired&) const = default;
};
struct TriggerFired {
  std::size_t trigger = 0;
  bool operator==(const TriggerFired&) const = default;
};
struct SessionInit {
  bool operator==(const SessionInit&) const = default;
};
}  // namespace cause

using MutationCause =
    std::variant<cause::UserInteraction, cause::RuleFired, cause::TriggerFired, cause::SessionInit>;

struct StateDelta {
  StateTarget target;
  Literal oldValue;
  Literal newValue;
  MutationCause cause;
  bool operator==(const StateDelta&) const = default;
};

// Trace entries. A pipeline step returns these in the order they happened;
// the session log writes exactly one row per entry.
namespace trace {
struct InteractionCommitted {
  TargetIndex target;
  std::optional<StateDelta> delta;  // empty for a write of the current value
};
struct RuleFired {
  std::size_t rule = 0;
  int depth = 1;
  std::vector<StateDelta> deltas;
};
struct CascadeTruncated {
  int depth = 0;
  std::vector<std::size_t> pending;  // rules that would have fired next
};
struct TriggerFired {
  std::size_t trigger = 0;
  std::int64_t atMs = 0;
  std::vector<StateDelta> deltas;
};
struct TaskChanged {
  std::size_t task = 0;
  TaskStatus from = TaskStatus::locked;
  TaskStatus to = TaskStatus::locked;
  std::int64_t atMs = 0;
};
}  // namespace trace

using TraceEntry = std::variant<trace::InteractionCommitted, trace::RuleFired, trace::CascadeTruncated,
                                trace::TriggerFired, trace::TaskChanged>;

struct StepResult {
  std::vector<TraceEntry> trace;

  /// All state deltas in application order.
  std::vector<StateDelta> deltas() const;
  std::vector<trace::TaskChanged> task_changes() const;
};

struct InteractionOutcome {
  bool blocked = false;
  std::optional<std::size_t> blockingRule;      // set iff blocked
  std::optional<std::string> explanationId;     // of the blocking rule
  StepResult step;                              // empty when blocked

  std::vector<StateDelta> deltas() const { return step.deltas(); }
};

class SimulationError : public std::runtime_error {
 public:
  enum class Kind { unknown_target, not_writable, out_of_domain, unknown_context, clock_regression,
                    unknown_task, task_not_abortable };
  SimulationError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Live state of one session. Not thread-safe: a World is confined to its
/// session's serialized execution context.
class World {
 public:
  /// Initial values, context overrides, AtTime(0) triggers, a rule fixpoint
  /// in which every true action rule counts as a fresh edge, then task
  /// activation.
  static std::pair<World, StepResult> init(std::shared_ptr<const CompiledScenario> scenario,
                                           const std::map<std::string, Literal>& context,
                                           int cascadeDepthLimit = kDefaultCascadeDepthLimit);

  /// Constraint-checks the write against the hypothetical post-state; when
  /// no constraint holds, commits it and runs rules, tasks and any
  /// zero-delay triggers it schedules.
  InteractionOutcome apply_interaction(std::string_view device, std::string_view property, const Literal& value,
                                       std::int64_t sessionEventId = 0);

  /// Edge-triggered fixpoint after `seeds` (already applied). Prior truth
  /// values come from undoing the seeds.
  StepResult evaluate_rules(const std::vector<StateDelta>& seeds);

  /// Fires triggers and task timeouts due in (clockMs, toMs] in time order,
  /// then sets clockMs = toMs. Path independent: advancing in several hops
  /// produces the same trace as one hop.
  StepResult advance_clock(std::int64_t toMs);

  StepResult check_tasks();

  /// Earliest pending trigger deadline or task timeout instant, if any.
  std::optional<std::int64_t> next_time_point() const;

  StepResult abort_task(std::string_view taskId);

  StateSnapshot snapshot() const;

  const CompiledScenario& scenario() const { return *scenario_; }
  const std::shared_ptr<const CompiledScenario>& scenario_ptr() const { return scenario_; }
  const ValueTable& values() const { return values_; }
  std::int64_t clock_ms() const { return clock_; }
  const std::vector<TaskState>& tasks() const { return tasks_; }
  int cascade_depth_limit() const { return depth_limit_; }
  bool one_shot_fired(std::size_t trigger) const { return fired_[trigger]; }

  /// Canonical names for a delta target ("heater.power" or "context.x").
  std::string target_name(const StateTarget& t) const;

 private:
  struct Pending {
    std::int64_t deadline = 0;
    std::size_t trigger = 0;
    std::uint64_t seq = 0;
  };

  World() = default;

  Literal& slot(const StateTarget& t);
  std::optional<StateDelta> write(const StateTarget& t, const Literal& v, const MutationCause& c);
  std::vector<bool> truths(const ValueTable& values) const;
  void run_fixpoint(std::vector<bool> prior, StepResult& out);
  void fire_trigger(std::size_t trigger, StepResult& out);
  void check_tasks_into(StepResult& out);
  void expire_tasks(StepResult& out);
  void schedule(std::size_t trigger, std::int64_t deadline);
  void fire_due(StepResult& out);

  std::shared_ptr<const CompiledScenario> scenario_;
  ValueTable values_;
  std::int64_t clock_ = 0;
  std::vector<TaskState> tasks_;
  std::vector<bool> fired_;
  std::vector<Pending> pending_;
  std::uint64_t next_seq_ = 0;
  int depth_limit_ = kDefaultCascadeDepthLimit;
};

}  // namespace shine::sim
