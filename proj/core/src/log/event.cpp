#include "shine/log/event.hpp"

#include <array>
#include <cstdio>
#include <ctime>
#include <stdexcept>

namespace shine::log {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 19> kNames = {
    "SESSION_START",       "SESSION_END",           "DEVICE_INTERACTION",    "INTERACTION_BLOCKED",
    "RULE_FIRED",          "TRIGGER_FIRED",         "TASK_STARTED",          "TASK_COMPLETED",
    "TASK_TIMEOUT",        "TASK_ABORTED",          "EXPLANATION_CREATED",   "EXPLANATION_DELIVERED",
    "EXPLANATION_REQUESTED", "EXPLANATION_QUERY",   "EXPLANATION_RATED",     "EXTERNAL_ENGINE_FALLBACK",
    "CASCADE_TRUNCATED",   "CLIENT_TELEMETRY",      "ERROR",
};

}  // namespace

std::string_view to_string(EventType t) { return kNames.at(static_cast<std::size_t>(t)); }

std::optional<EventType> event_type_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == s) return static_cast<EventType>(i);
  }
  return std::nullopt;
}

json to_json(const LogEvent& e) {
  return json{{"sessionId", e.sessionId}, {"seq", e.seq},         {"tMs", e.tMs},
              {"wallTime", e.wallTime},   {"type", to_string(e.type)}, {"payload", e.payload}};
}

LogEvent event_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("log event must be an object");
  auto need = [&](const char* key, json::value_t t1, json::value_t t2) -> const json& {
    auto it = j.find(key);
    if (it == j.end() || (it->type() != t1 && it->type() != t2)) {
      throw std::invalid_argument(std::string("log event field '") + key + "' missing or mistyped");
    }
    return *it;
  };
  LogEvent e;
  e.sessionId = need("sessionId", json::value_t::string, json::value_t::string).get<std::string>();
  e.seq = need("seq", json::value_t::number_unsigned, json::value_t::number_integer).get<std::int64_t>();
  e.tMs = need("tMs", json::value_t::number_unsigned, json::value_t::number_integer).get<std::int64_t>();
  e.wallTime = need("wallTime", json::value_t::string, json::value_t::string).get<std::string>();
  auto type = event_type_from_string(need("type", json::value_t::string, json::value_t::string).get<std::string>());
  if (!type) throw std::invalid_argument("unknown log event type");
  e.type = *type;
  e.payload = need("payload", json::value_t::object, json::value_t::object);
  return e;
}

std::string iso8601_utc(std::int64_t epochMs) {
  std::int64_t secs = epochMs / 1000;
  std::int64_t ms = epochMs % 1000;
  if (ms < 0) {
    ms += 1000;
    secs -= 1;
  }
  std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace shine::log
