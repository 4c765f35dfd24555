#pragma once

#include "shine/bot/script.hpp"
#include "shine/explain/engine_client.hpp"
#include "shine/log/storage.hpp"
#include "shine/scenario/compiled.hpp"
#include "shine/sim/snapshot.hpp"

#include <chrono>
#include <functional>
#include <memory>

namespace shine::bot {

struct RunOptions {
  /// Seeds the session id and token; identical seeds give identical logs.
  std::uint64_t seed = 1;
  /// Memory storage when null.
  std::shared_ptr<log::StorageDriver> storage;
  /// Drive the session through a real REST + WebSocket server on a loopback
  /// port instead of calling it directly. Virtual time is still advanced
  /// in-process so the run stays deterministic.
  bool viaNetwork = false;
  std::function<std::shared_ptr<explain::EngineClient>(const EngineEndpoint&)> engineFactory;
  std::chrono::milliseconds networkTimeout{5000};
};

struct RunResult {
  bool passed = true;
  std::optional<std::size_t> failedStep;  // index into script.steps
  std::string message;
  std::string sessionId;
  nlohmann::json summary;
  sim::StateSnapshot finalState;
  std::vector<nlohmann::json> received;  // server events in arrival order
  int serverErrors = 0;                  // error events; they do not fail the run by themselves
};

/// Runs the script against a fresh session under virtual time. Expect
/// steps fail the run at their index; the session is still completed so
/// its log is whole.
RunResult run_bot(std::shared_ptr<const CompiledScenario> scenario, const BotScript& script,
                  const RunOptions& options = {});

}  // namespace shine::bot
