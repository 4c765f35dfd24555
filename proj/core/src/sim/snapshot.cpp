#include "shine/sim/snapshot.hpp"

#include <stdexcept>

namespace shine::sim {

using nlohmann::json;

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::locked: return "locked";
    case TaskStatus::active: return "active";
    case TaskStatus::completed: return "completed";
    case TaskStatus::timedOut: return "timedOut";
    case TaskStatus::aborted: return "aborted";
  }
  return "?";
}

std::optional<TaskStatus> task_status_from_string(std::string_view s) {
  for (auto st : {TaskStatus::locked, TaskStatus::active, TaskStatus::completed, TaskStatus::timedOut,
                  TaskStatus::aborted}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

json to_json(const TaskState& t) {
  json j{{"status", to_string(t.status)}};
  j["startedAtMs"] = t.startedAtMs ? json(*t.startedAtMs) : json(nullptr);
  j["endedAtMs"] = t.endedAtMs ? json(*t.endedAtMs) : json(nullptr);
  return j;
}

json to_json(const StateSnapshot& s) {
  json devices = json::object();
  for (const auto& [id, props] : s.devices) {
    json p = json::object();
    for (const auto& [name, v] : props) p[name] = shine::to_json(v);
    devices[id] = std::move(p);
  }
  json context = json::object();
  for (const auto& [name, v] : s.context) context[name] = shine::to_json(v);
  json tasks = json::object();
  for (const auto& [id, t] : s.tasks) tasks[id] = to_json(t);
  return {{"devices", std::move(devices)}, {"context", std::move(context)}, {"clockMs", s.clockMs},
          {"tasks", std::move(tasks)}};
}

namespace {

Literal literal(const json& j) {
  Literal v;
  if (!shine::from_json(j, v)) throw std::invalid_argument("snapshot value is not a scalar");
  return v;
}

std::optional<std::int64_t> opt_ms(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::int64_t>();
}

}  // namespace

StateSnapshot snapshot_from_json(const json& j) {
  try {
    StateSnapshot s;
    for (const auto& [id, props] : j.at("devices").items()) {
      auto& row = s.devices[id];
      for (const auto& [name, v] : props.items()) row[name] = literal(v);
    }
    for (const auto& [name, v] : j.at("context").items()) s.context[name] = literal(v);
    s.clockMs = j.at("clockMs").get<std::int64_t>();
    for (const auto& [id, t] : j.at("tasks").items()) {
      auto status = task_status_from_string(t.at("status").get<std::string>());
      if (!status) throw std::invalid_argument("unknown task status");
      s.tasks[id] = TaskState{*status, opt_ms(t, "startedAtMs"), opt_ms(t, "endedAtMs")};
    }
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace shine::sim
