#pragma once

#include "shine/session/session.hpp"

#include <atomic>
#include <condition_variable>
#include <map>
#include <random>
#include <shared_mutex>
#include <thread>

namespace shine::session {

struct ManagerOptions {
  /// Live sessions take virtual time from the steady clock (ms since the
  /// session started); manual sessions only move through Session::advance_to.
  bool liveClock = true;
  /// Prefix for wsUrl, e.g. "ws://127.0.0.1:8080".
  std::string publicBaseUrl = "ws://127.0.0.1";
  /// Seeds session ids and tokens; random_device when absent.
  std::optional<std::uint64_t> seed;
  std::chrono::milliseconds inactivityLimit{60 * 60 * 1000};
  std::chrono::milliseconds tickInterval{250};
  /// Epoch ms of virtual time 0 for manual sessions, so their wall times
  /// are reproducible. Live sessions use the system clock.
  std::int64_t manualWallBaseMs = 1767225600000;  // 2026-01-01T00:00:00Z
  int cascadeDepthLimit = sim::kDefaultCascadeDepthLimit;
  /// Builds the engine client for a scenario with an engine endpoint.
  std::function<std::shared_ptr<explain::EngineClient>(const EngineEndpoint&)> engineFactory =
      [](const EngineEndpoint& e) { return explain::make_engine_client(e); };
  std::function<SteadyClock::time_point()> steadyNow = [] { return SteadyClock::now(); };
};

struct CreatedSession {
  std::string sessionId;
  std::string wsUrl;
  std::string token;
  std::shared_ptr<Session> session;
};

/// Registry of sessions over a set of compiled scenarios. Lookups and
/// creation are safe from any thread.
class SessionManager {
 public:
  SessionManager(std::map<std::string, std::shared_ptr<const CompiledScenario>> scenarios,
                 std::shared_ptr<log::StorageDriver> storage, ManagerOptions options = {});
  ~SessionManager();

  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Throws SessionError: not_found for an unknown scenario, bad_request for
  /// a malformed or out-of-domain context parameter.
  CreatedSession create(const std::string& scenarioId, const std::string& participantId,
                        const std::string& contextParam);
  CreatedSession create(const std::string& scenarioId, const std::string& participantId,
                        const SessionContextParams& params);

  std::shared_ptr<Session> find(const std::string& sessionId) const;
  /// Throws SessionError(not_found).
  std::shared_ptr<Session> get(const std::string& sessionId) const;
  std::vector<std::shared_ptr<Session>> sessions() const;

  std::shared_ptr<const CompiledScenario> scenario(const std::string& scenarioId) const;
  std::vector<std::string> scenario_ids() const;

  /// Advances live sessions and expires idle ones. Returns how many expired.
  std::size_t tick();
  void start_ticker();
  void stop_ticker();

  void set_public_base_url(std::string url);
  const log::StorageDriver& storage() const { return *storage_; }
  std::shared_ptr<log::StorageDriver> storage_ptr() const { return storage_; }
  const ManagerOptions& options() const { return options_; }

 private:
  std::string random_hex(std::size_t bytes);

  std::map<std::string, std::shared_ptr<const CompiledScenario>> scenarios_;
  std::shared_ptr<log::StorageDriver> storage_;
  ManagerOptions options_;

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
  std::string base_url_;

  std::mutex ticker_mu_;
  std::condition_variable ticker_cv_;
  bool ticker_stop_ = false;
  std::thread ticker_;
};

}  // namespace shine::session
