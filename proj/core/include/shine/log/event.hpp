#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace shine::log {

enum class EventType {
  SESSION_START,
  SESSION_END,
  DEVICE_INTERACTION,
  INTERACTION_BLOCKED,
  RULE_FIRED,
  TRIGGER_FIRED,
  TASK_STARTED,
  TASK_COMPLETED,
  TASK_TIMEOUT,
  TASK_ABORTED,
  EXPLANATION_CREATED,
  EXPLANATION_DELIVERED,
  EXPLANATION_REQUESTED,
  EXPLANATION_QUERY,
  EXPLANATION_RATED,
  EXTERNAL_ENGINE_FALLBACK,
  CASCADE_TRUNCATED,
  CLIENT_TELEMETRY,
  ERROR,
};

std::string_view to_string(EventType t);
std::optional<EventType> event_type_from_string(std::string_view s);

struct LogEvent {
  std::string sessionId;
  std::int64_t seq = 0;
  std::int64_t tMs = 0;
  std::string wallTime;  // ISO-8601 UTC, millisecond precision
  EventType type = EventType::ERROR;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const LogEvent&) const = default;
};

nlohmann::json to_json(const LogEvent& e);
/// Throws std::invalid_argument on malformed input.
LogEvent event_from_json(const nlohmann::json& j);

/// `2026-01-01T00:00:00.000Z` style formatting of milliseconds since the epoch.
std::string iso8601_utc(std::int64_t epochMs);

}  // namespace shine::log
