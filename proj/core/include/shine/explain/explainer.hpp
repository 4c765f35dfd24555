#pragma once

#include "shine/explain/cause.hpp"
#include "shine/explain/engine_client.hpp"
#include "shine/scenario/compiled.hpp"
#include "shine/sim/snapshot.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shine::explain {

inline constexpr std::string_view kNoFurtherExplanation = "I have no further explanation for this.";
/// specId recorded for the unmatched follow-up reply.
inline constexpr std::string_view kUnmatchedSpecId = "unmatched";

enum class Source { internal, external, externalFallback };
std::string_view to_string(Source s);

struct ExplanationInstance {
  std::string instanceId;
  std::string specId;
  std::string text;
  DeliveryMode mode = DeliveryMode::push;
  ExplanationCause cause;
  std::int64_t createdAtMs = 0;
  std::optional<std::int64_t> deliveredAtMs;
  Source source = Source::internal;
  std::optional<std::string> parentInstanceId;
  std::vector<std::string> chain;  // spec ids from the root of the follow-up chain to this one
  std::vector<std::string> followUpHints;
  std::vector<std::string> devices;  // devices the cause touched
};

nlohmann::json to_json(const ExplanationInstance& e);

struct DeliveryDecision {
  bool sendNow = true;
  bool notifyAvailability = false;  // pull only
  bool chatEnabled = false;         // interactive only
};

DeliveryDecision decide_delivery(DeliveryMode mode, const ExplanationConfig& config);

/// What happened when an external engine was consulted.
struct ExternalExchange {
  EngineReply::Status status = EngineReply::Status::ok;
  std::string detail;
  std::int64_t latencyMs = 0;
  bool fellBack() const { return status != EngineReply::Status::ok; }
};

struct Created {
  const ExplanationInstance* instance = nullptr;
  DeliveryDecision decision;
  std::optional<ExternalExchange> external;
  bool matched = true;  // false only for the unmatched follow-up reply
};

enum class RatingValue { up, down };
std::string_view to_string(RatingValue v);
std::optional<RatingValue> rating_from_string(std::string_view s);

struct Rating {
  std::string instanceId;
  RatingValue value = RatingValue::up;
  std::int64_t atMs = 0;
};

struct RatingResult {
  Rating rating;
  std::optional<RatingValue> previous;  // set for revisions
};

class ExplanationError : public std::runtime_error {
 public:
  enum class Kind { unknown_instance, not_delivered, not_interactive };
  ExplanationError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Per-session explanation state: instances, recency bookkeeping for user
/// requests, ratings, and the delivery policy. Confined to its session's
/// execution context like the World.
class Explainer {
 public:
  struct Options {
    std::string sessionId;
    DeliveryMode mode = DeliveryMode::push;
    nlohmann::json userContext = nlohmann::json::object();
    /// Used for external specs when the scenario names an endpoint; null
    /// means every external spec renders its fallback template.
    std::shared_ptr<EngineClient> engine;
  };

  Explainer(std::shared_ptr<const CompiledScenario> scenario, Options options);

  DeliveryMode mode() const { return options_.mode; }

  /// Spec attached to the cause. A UserRequest resolves to the spec of the
  /// most recent explained cause touching the device (any device when none
  /// is named). Follow-up queries do not select through here.
  const ExplanationSpec* select(const ExplanationCause& cause) const;

  /// Creates an instance for the cause if a spec is attached, consulting the
  /// external engine for external specs. `devices` feeds recency bookkeeping.
  std::optional<Created> explain(const ExplanationCause& cause, const std::vector<std::string>& devices,
                                 const sim::StateSnapshot& state);

  /// Interactive follow-up against `parentId` (or the latest delivered
  /// instance when empty). Always creates an instance; the unmatched reply
  /// has matched = false.
  Created query(std::string_view text, const std::optional<std::string>& parentId, const sim::StateSnapshot& state);

  const ExplanationInstance& mark_delivered(const std::string& instanceId, std::int64_t atMs);

  /// Most recent undelivered instance, restricted to one device when given.
  const ExplanationInstance* latest_held(const std::optional<std::string>& deviceId) const;
  const ExplanationInstance* latest_delivered() const;

  RatingResult rate(const std::string& instanceId, RatingValue value, std::int64_t atMs);

  const ExplanationInstance* find(std::string_view instanceId) const;
  const std::deque<ExplanationInstance>& instances() const { return instances_; }
  const std::map<std::string, Rating>& ratings() const { return ratings_; }

 private:
  struct Recent {
    std::string specId;
    std::vector<std::string> devices;
  };

  Created create(const ExplanationSpec& spec, ExplanationCause cause, std::vector<std::string> devices,
                 const sim::StateSnapshot& state, const ExplanationInstance* parent);
  nlohmann::json engine_request(const ExplanationCause& cause, const sim::StateSnapshot& state) const;

  std::shared_ptr<const CompiledScenario> scenario_;
  Options options_;
  std::deque<ExplanationInstance> instances_;  // stable addresses
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::vector<Recent> recent_;
  std::map<std::string, Rating> ratings_;
};

}  // namespace shine::explain
