#pragma once

#include "shine/value.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace shine::sim {

enum class TaskStatus { locked, active, completed, timedOut, aborted };

std::string_view to_string(TaskStatus s);
std::optional<TaskStatus> task_status_from_string(std::string_view s);
inline bool is_terminal(TaskStatus s) {
  return s == TaskStatus::completed || s == TaskStatus::timedOut || s == TaskStatus::aborted;
}

struct TaskState {
  TaskStatus status = TaskStatus::locked;
  std::optional<std::int64_t> startedAtMs;
  std::optional<std::int64_t> endedAtMs;
  bool operator==(const TaskState&) const = default;
};

/// Immutable copy of the observable world. Keys are ids, so the serialized
/// form is independent of compiled indices.
struct StateSnapshot {
  std::map<std::string, std::map<std::string, Literal>> devices;
  std::map<std::string, Literal> context;
  std::int64_t clockMs = 0;
  std::map<std::string, TaskState> tasks;
  bool operator==(const StateSnapshot&) const = default;
};

nlohmann::json to_json(const TaskState& t);
nlohmann::json to_json(const StateSnapshot& s);
/// Throws std::invalid_argument on malformed input.
StateSnapshot snapshot_from_json(const nlohmann::json& j);

}  // namespace shine::sim
