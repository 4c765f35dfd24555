#pragma once

#include "shine/scenario/condition.hpp"
#include "shine/scenario/spec.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shine {

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct TargetIndex {
  std::size_t device = 0;
  std::size_t property = 0;
  bool operator==(const TargetIndex&) const = default;
  auto operator<=>(const TargetIndex&) const = default;
};

struct CompiledAction {
  TargetIndex target;
  Literal value;
};

struct CompiledBlock {
  TargetIndex target;
  std::optional<Literal> blockedValue;
};

struct CompiledRule {
  std::size_t index = 0;  // position in spec.rules
  CheckedCondition condition;
  std::vector<CompiledAction> actions;
  std::vector<CompiledBlock> blocks;
};

struct CompiledEffect {
  enum class Kind { device, context };
  Kind kind = Kind::device;
  TargetIndex target;        // device
  std::size_t context = 0;   // context
  Literal value;
};

struct CompiledTrigger {
  std::size_t index = 0;
  std::vector<CompiledEffect> effects;
  std::optional<std::int64_t> atMs;        // AtTime
  std::optional<std::size_t> eventDevice;  // AfterEvent restricted to one device
  std::int64_t delayMs = 0;                // AfterEvent
};

struct CompiledTask {
  std::size_t index = 0;
  CheckedCondition goal;
  std::optional<std::int64_t> timeoutMs;
  std::optional<std::size_t> dependsOn;
};

/// A validated scenario plus every lookup the simulation needs. Immutable
/// once built; shared between sessions.
class CompiledScenario {
 public:
  const ScenarioSpec& spec() const { return spec_; }

  std::optional<std::size_t> device_index(std::string_view id) const;
  std::optional<TargetIndex> target(std::string_view device, std::string_view property) const;
  const PropertySpec& property(TargetIndex t) const {
    return spec_.devices[t.device].properties[t.property];
  }
  std::optional<std::size_t> rule_index(std::string_view id) const;
  std::optional<std::size_t> trigger_index(std::string_view id) const;
  std::optional<std::size_t> task_index(std::string_view id) const;
  const ExplanationSpec* explanation(std::string_view id) const;

  /// Context variable names in index order (sorted).
  const std::vector<std::string>& context_names() const { return context_names_; }
  std::optional<std::size_t> context_index(std::string_view name) const;

  const std::vector<CompiledRule>& rules() const { return rules_; }  // by spec index
  /// Action rules in evaluation order: (priority, document order).
  const std::vector<std::size_t>& action_order() const { return action_order_; }
  /// Constraint rules touching each device, in evaluation order.
  const std::vector<std::size_t>& constraints_for(std::size_t device) const {
    return constraints_by_device_[device];
  }
  const std::vector<CompiledTrigger>& triggers() const { return triggers_; }
  /// AfterEvent device_interaction triggers that match `device`, in document order.
  std::vector<std::size_t> triggers_for_interaction(std::size_t device) const;
  const std::vector<CompiledTask>& tasks() const { return tasks_; }
  /// Task indices with every dependency before its dependents.
  const std::vector<std::size_t>& task_order() const { return task_order_; }

  ValueTable initial_values() const;

 private:
  friend std::shared_ptr<const CompiledScenario> compile(const ScenarioSpec& spec);

  ScenarioSpec spec_;
  std::map<std::string, std::size_t, std::less<>> devices_, rules_by_id_, triggers_by_id_, tasks_by_id_,
      explanations_by_id_, context_by_name_;
  std::vector<std::map<std::string, std::size_t, std::less<>>> properties_;
  std::vector<std::string> context_names_;
  std::vector<CompiledRule> rules_;
  std::vector<std::size_t> action_order_;
  std::vector<std::vector<std::size_t>> constraints_by_device_;
  std::vector<CompiledTrigger> triggers_;
  std::vector<std::size_t> interaction_triggers_;
  std::vector<CompiledTask> tasks_;
  std::vector<std::size_t> task_order_;
};

/// Throws PreconditionError unless validate_scenario(spec).ok.
std::shared_ptr<const CompiledScenario> compile(const ScenarioSpec& spec);

std::int64_t seconds_to_ms(double seconds);

}  // namespace shine
