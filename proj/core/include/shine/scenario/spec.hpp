#pragma once

#include "shine/scenario/condition.hpp"
#include "shine/value.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace shine {

struct TilePos {
  int x = 0;
  int y = 0;
  bool operator==(const TilePos&) const = default;
};

/// Axis-aligned rectangle in tile units; covers [x, x+width) x [y, y+height).
struct TileRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  bool operator==(const TileRect&) const = default;

  bool contains(TilePos p) const {
    return p.x >= x && p.x < x + width && p.y >= y && p.y < y + height;
  }
  bool on_boundary(TilePos p) const {
    return contains(p) &&
           (p.x == x || p.x == x + width - 1 || p.y == y || p.y == y + height - 1);
  }
};

struct DoorSpec {
  std::string target;
  TilePos position;
  bool operator==(const DoorSpec&) const = default;
};

struct RoomSpec {
  std::string id;
  TileRect bounds;
  std::vector<DoorSpec> doors;
  bool operator==(const RoomSpec&) const = default;
};

enum class PropertyKind { boolean, enumeration, numeric };
enum class WidgetHint { toggle, dropdown, radio, slider, stepper };

std::string_view to_string(PropertyKind kind);
std::string_view to_string(WidgetHint hint);
std::optional<WidgetHint> widget_hint_from_string(std::string_view s);

struct PropertySpec {
  std::string name;
  PropertyKind kind = PropertyKind::boolean;
  std::vector<std::string> values;  // enumeration
  double min = 0, max = 0, step = 0;  // numeric
  Literal initial = false;
  bool userWritable = false;
  std::optional<WidgetHint> widgetHint;
  bool operator==(const PropertySpec&) const = default;

  LiteralKind literal_kind() const;
  /// True when `v` has the right literal kind and lies in the property's
  /// domain (enumeration member, or on the numeric step grid in [min, max]).
  bool accepts(const Literal& v) const;
  /// Booleans with a toggle hint render as on/off.
  bool renders_on_off() const;
};

struct DeviceSpec {
  std::string id;
  std::string type;
  std::string roomId;
  TilePos position;
  std::vector<PropertySpec> properties;
  bool operator==(const DeviceSpec&) const = default;

  const PropertySpec* find_property(std::string_view name) const;
};

struct ActionSpec {
  std::string deviceId;
  std::string property;
  Literal value;
  bool operator==(const ActionSpec&) const = default;
};

struct BlockSpec {
  std::string deviceId;
  std::string property;
  std::optional<Literal> blockedValue;  // absent: any change is blocked
  bool operator==(const BlockSpec&) const = default;
};

enum class RuleKind { action, constraint };

struct RuleSpec {
  std::string id;
  RuleKind kind = RuleKind::action;
  ConditionExpr condition;
  std::vector<ActionSpec> actions;
  std::vector<BlockSpec> blocks;
  std::optional<std::string> explanationId;
  std::int64_t priority = 0;
  bool operator==(const RuleSpec&) const = default;
};

struct AtTime {
  double seconds = 0;
  bool operator==(const AtTime&) const = default;
};

/// The only event type understood today is "device_interaction", meaning a
/// committed participant write (optionally restricted to one device).
struct AfterEvent {
  std::string eventType;
  std::optional<std::string> deviceId;
  double delaySeconds = 0;
  bool operator==(const AfterEvent&) const = default;
};

inline constexpr std::string_view kDeviceInteractionEvent = "device_interaction";

struct EnvironmentSet {
  std::string name;
  Literal value;
  bool operator==(const EnvironmentSet&) const = default;
};

using TriggerEffect = std::variant<ActionSpec, EnvironmentSet>;

struct TriggerSpec {
  std::string id;
  std::variant<AtTime, AfterEvent> when;
  std::vector<TriggerEffect> effects;
  bool oneShot = true;
  std::optional<std::string> explanationId;
  bool operator==(const TriggerSpec&) const = default;
};

struct TaskSpec {
  std::string id;
  std::string description;
  ConditionExpr goal;
  std::optional<double> timeoutSeconds;
  std::optional<std::string> dependsOn;
  bool abortable = false;
  bool operator==(const TaskSpec&) const = default;
};

struct FollowUpSpec {
  std::vector<std::string> keywords;
  std::string explanationId;
  bool operator==(const FollowUpSpec&) const = default;
};

struct ExplanationSpec {
  std::string id;
  std::string templateText;
  std::vector<FollowUpSpec> followUps;
  bool external = false;
  bool operator==(const ExplanationSpec&) const = default;
};

enum class DeliveryMode { push, pull, interactive };
enum class EngineTransport { rest, websocket };

std::string_view to_string(DeliveryMode mode);
std::optional<DeliveryMode> delivery_mode_from_string(std::string_view s);
std::string_view to_string(EngineTransport t);

struct EngineEndpoint {
  std::string url;
  EngineTransport transport = EngineTransport::rest;
  bool operator==(const EngineEndpoint&) const = default;
};

inline constexpr std::int64_t kDefaultEngineTimeoutMs = 2000;

struct ExplanationConfig {
  DeliveryMode defaultDeliveryMode = DeliveryMode::push;
  std::optional<EngineEndpoint> engineEndpoint;
  std::int64_t engineTimeoutMs = kDefaultEngineTimeoutMs;
  /// Emit explanation_available for held pull-mode explanations.
  bool notifyAvailability = true;
  bool operator==(const ExplanationConfig&) const = default;
};

struct ScenarioSpec {
  std::string id;
  std::string name;
  std::vector<RoomSpec> rooms;
  std::vector<DeviceSpec> devices;
  std::vector<RuleSpec> rules;
  std::vector<TriggerSpec> triggers;
  std::vector<TaskSpec> tasks;
  std::vector<ExplanationSpec> explanations;
  std::map<std::string, Literal> contextDefaults;
  ExplanationConfig explanationConfig;
  bool operator==(const ScenarioSpec&) const = default;

  const DeviceSpec* find_device(std::string_view id) const;
  const ExplanationSpec* find_explanation(std::string_view id) const;
};

}  // namespace shine
