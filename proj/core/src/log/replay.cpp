#include "shine/log/replay.hpp"

#include "shine/sim/world.hpp"

namespace shine::log {

using nlohmann::json;

void verify_sequence(const std::vector<LogEvent>& events) {
  std::int64_t last_t = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const LogEvent& e = events[i];
    auto expected = static_cast<std::int64_t>(i) + 1;
    if (e.seq != expected) {
      throw ReplayError("seq gap: expected " + std::to_string(expected) + ", found " + std::to_string(e.seq));
    }
    if (e.sessionId != events.front().sessionId) throw ReplayError("events from more than one session");
    if (e.tMs < last_t) throw ReplayError("tMs decreases at seq " + std::to_string(e.seq));
    last_t = e.tMs;
  }
}

namespace {

const json& field(const LogEvent& e, const char* key) {
  auto it = e.payload.find(key);
  if (it == e.payload.end()) {
    throw ReplayError(std::string(to_string(e.type)) + " at seq " + std::to_string(e.seq) + " lacks '" + key + "'");
  }
  return *it;
}

std::string string_field(const LogEvent& e, const char* key) {
  const json& v = field(e, key);
  if (!v.is_string()) throw ReplayError(std::string("'") + key + "' is not a string at seq " + std::to_string(e.seq));
  return v.get<std::string>();
}

}  // namespace

sim::StateSnapshot replay(std::shared_ptr<const CompiledScenario> scenario, const std::vector<LogEvent>& events) {
  verify_sequence(events);
  if (events.empty() || events.front().type != EventType::SESSION_START) {
    throw ReplayError("log does not begin with SESSION_START");
  }
  const LogEvent& start = events.front();
  if (string_field(start, "scenarioId") != scenario->spec().id) {
    throw ReplayError("log was recorded against scenario '" + string_field(start, "scenarioId") + "', not '" +
                      scenario->spec().id + "'");
  }
  std::map<std::string, Literal> context;
  if (auto it = start.payload.find("context"); it != start.payload.end()) {
    if (!it->is_object()) throw ReplayError("SESSION_START context is not an object");
    for (auto c = it->begin(); c != it->end(); ++c) {
      Literal v;
      if (!from_json(c.value(), v)) throw ReplayError("context value for '" + c.key() + "' is not a scalar");
      context[c.key()] = v;
    }
  }
  int depth = start.payload.value("cascadeDepthLimit", sim::kDefaultCascadeDepthLimit);

  try {
    auto world = sim::World::init(scenario, context, depth).first;
    for (std::size_t i = 1; i < events.size(); ++i) {
      const LogEvent& e = events[i];
      if (e.type == EventType::DEVICE_INTERACTION) {
        world.advance_clock(e.tMs);
        Literal value;
        if (!from_json(field(e, "value"), value)) throw ReplayError("interaction value is not a scalar");
        auto out = world.apply_interaction(string_field(e, "deviceId"), string_field(e, "property"), value, e.seq);
        std::string outcome = out.blocked ? "blocked" : out.deltas().empty() ? "noop" : "committed";
        std::string logged = string_field(e, "outcome");
        if (outcome != logged) {
          throw ReplayError("interaction at seq " + std::to_string(e.seq) + " replays as " + outcome +
                            " but was logged as " + logged);
        }
      } else if (e.type == EventType::TASK_ABORTED) {
        world.advance_clock(e.tMs);
        world.abort_task(string_field(e, "taskId"));
      }
    }
    world.advance_clock(events.back().tMs);
    return world.snapshot();
  } catch (const sim::SimulationError& err) {
    throw ReplayError(std::string("replay diverged: ") + err.what());
  }
}

}  // namespace shine::log
