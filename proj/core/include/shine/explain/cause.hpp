#pragma once

#include "shine/value.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <variant>

namespace shine::explain {

namespace cause {
struct BlockedInteraction {
  std::string ruleId;
  std::string deviceId;
  std::string property;
  Literal attemptedValue;
  bool operator==(const BlockedInteraction&) const = default;
};
struct RuleFired {
  std::string ruleId;
  bool operator==(const RuleFired&) const = default;
};
struct TriggerFired {
  std::string triggerId;
  bool operator==(const TriggerFired&) const = default;
};
struct UserRequest {
  std::optional<std::string> deviceId;
  bool operator==(const UserRequest&) const = default;
};
struct FollowUpQuery {
  std::string parentInstanceId;
  std::string text;
  bool operator==(const FollowUpQuery&) const = default;
};
}  // namespace cause

using ExplanationCause = std::variant<cause::BlockedInteraction, cause::RuleFired, cause::TriggerFired,
                                      cause::UserRequest, cause::FollowUpQuery>;

/// `{"type": "blockedInteraction", "ruleId": ..., ...}`; the same shape goes
/// to external engines and into the log.
nlohmann::json to_json(const ExplanationCause& c);
/// Throws std::invalid_argument on malformed input.
ExplanationCause cause_from_json(const nlohmann::json& j);

}  // namespace shine::explain
