#pragma once

#include "shine/explain/explainer.hpp"
#include "shine/log/event.hpp"
#include "shine/log/storage.hpp"
#include "shine/scenario/compiled.hpp"
#include "shine/session/context_params.hpp"
#include "shine/sim/world.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shine::session {

enum class SessionStatus { active, completed, expired };
std::string_view to_string(SessionStatus s);

class SessionError : public std::runtime_error {
 public:
  enum class Kind { not_found, bad_request, conflict };
  SessionError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Server event names on the wire.
namespace wire {
inline constexpr const char* kStateUpdate = "state_update";
inline constexpr const char* kInteractionBlocked = "interaction_blocked";
inline constexpr const char* kExplanation = "explanation";
inline constexpr const char* kExplanationAvailable = "explanation_available";
inline constexpr const char* kTaskUpdate = "task_update";
inline constexpr const char* kSessionEnd = "session_end";
inline constexpr const char* kError = "error";
}  // namespace wire

using SteadyClock = std::chrono::steady_clock;

struct SessionConfig {
  std::string sessionId;
  std::string participantId;
  std::string token;
  SessionContextParams params;
  int cascadeDepthLimit = sim::kDefaultCascadeDepthLimit;
  std::shared_ptr<log::StorageDriver> storage;
  std::shared_ptr<explain::EngineClient> engine;
  /// Wall timestamp for a row logged at virtual time tMs.
  std::function<std::string(std::int64_t tMs)> wallTime;
  /// Live sessions read virtual time from here before every step; manual
  /// sessions leave it empty and move time only through advance_to.
  std::function<std::int64_t()> virtualNow;
  std::function<SteadyClock::time_point()> steadyNow = [] { return SteadyClock::now(); };
};

/// One participant's session: world, explainer and log behind a single
/// mutex, so every handler runs to completion before the next one starts.
/// Server events go to the attached sink while the lock is held, which keeps
/// their order identical to log order; they are also returned to the caller.
class Session {
 public:
  using Events = std::vector<nlohmann::json>;
  using Sink = std::function<void(const nlohmann::json&)>;

  struct Attachment {
    std::uint64_t generation = 0;
    Events events;
  };

  /// Initializes the world, logs SESSION_START and the init rows, and stores
  /// the session record. Throws SessionError(bad_request) for a context the
  /// scenario rejects.
  static std::shared_ptr<Session> start(std::shared_ptr<const CompiledScenario> scenario, SessionConfig config);

  /// Replaces any previous sink. The first event is a full state_update;
  /// push explanations produced before the first attach follow it.
  Attachment attach(Sink sink);
  /// Drops the sink if it is still the one attached under `generation`.
  void detach(std::uint64_t generation);

  /// Dispatches one client envelope. Malformed input yields an error event;
  /// the session stays live.
  Events handle(const nlohmann::json& envelope);
  /// Moves virtual time forward, firing due triggers and timeouts.
  Events advance_to(std::int64_t clockMs);
  /// advance_to(virtualNow()) for live sessions; no-op otherwise.
  Events tick();

  /// Idempotent. Throws SessionError(conflict) for an expired session.
  nlohmann::json complete(Events* events = nullptr);
  /// Marks an active session expired; returns false if it was not active.
  bool expire(Events* events = nullptr);
  bool idle_for(SteadyClock::duration limit) const;

  /// Snapshot fields plus session metadata and explanation summaries.
  nlohmann::json state() const;
  sim::StateSnapshot snapshot() const;
  nlohmann::json summary() const;
  SessionStatus status() const;
  std::int64_t last_seq() const;
  std::int64_t clock_ms() const;
  /// Client envelopes processed so far.
  std::uint64_t handled_count() const;
  /// Events handed to the sink of the current attachment, including the
  /// initial snapshot. Lets a remote client know when it has caught up.
  std::uint64_t emitted_count() const;

  const std::string& id() const { return config_.sessionId; }
  const std::string& token() const { return config_.token; }
  const std::string& participant() const { return config_.participantId; }
  const std::string& scenario_id() const { return scenario_->spec().id; }
  DeliveryMode delivery_mode() const { return mode_; }

 private:
  struct Counts {
    int interactions = 0, blocked = 0, explanations = 0, delivered = 0, queries = 0, ratings = 0, telemetry = 0,
        errors = 0;
  };

  Session(std::shared_ptr<const CompiledScenario> scenario, SessionConfig config, sim::World world,
          DeliveryMode mode);

  std::int64_t log(log::EventType type, nlohmann::json payload);
  void emit(Events& out, const char* type, std::int64_t seq, nlohmann::json payload);
  void flush(const Events& out, std::size_t from);

  void live_advance(Events& out);
  void advance_locked(std::int64_t to, Events& out);
  void absorb(const sim::StepResult& step, Events& out);
  void present(const explain::Created& created, Events& out, bool force);
  void deliver(const std::string& instanceId, Events& out);
  void fail(Events& out, const std::string& code, const std::string& message, const nlohmann::json& clientSeq);
  void end(const std::string& reason, Events& out);

  void on_interaction(const nlohmann::json& payload, const nlohmann::json& clientSeq, Events& out);
  void on_request(const nlohmann::json& payload, const nlohmann::json& clientSeq, Events& out);
  void on_query(const nlohmann::json& payload, const nlohmann::json& clientSeq, Events& out);
  void on_rating(const nlohmann::json& payload, const nlohmann::json& clientSeq, Events& out);
  void on_abort(const nlohmann::json& payload, const nlohmann::json& clientSeq, Events& out);

  nlohmann::json change_json(const sim::StateDelta& d, std::int64_t logSeq) const;
  nlohmann::json mutation_cause_json(const sim::MutationCause& c) const;
  nlohmann::json state_locked() const;
  nlohmann::json summary_locked() const;

  mutable std::mutex mu_;
  std::shared_ptr<const CompiledScenario> scenario_;
  SessionConfig config_;
  sim::World world_;
  explain::Explainer explainer_;
  DeliveryMode mode_;
  SessionStatus status_ = SessionStatus::active;
  std::int64_t seq_ = 0;
  std::int64_t row_time_ = 0;
  std::string created_at_;
  Sink sink_;
  std::uint64_t generation_ = 0;
  std::uint64_t handled_ = 0;
  std::uint64_t emitted_ = 0;
  bool ever_attached_ = false;
  std::vector<std::string> awaiting_attach_;  // push instances created before any client was listening
  Counts counts_;
  std::optional<nlohmann::json> final_summary_;
  SteadyClock::time_point last_activity_;
};

}  // namespace shine::session
