#pragma once

#include "shine/log/event.hpp"
#include "shine/scenario/compiled.hpp"
#include "shine/sim/snapshot.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

namespace shine::log {

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ReplayError unless seqs run 1, 2, 3, ... with one session id and
/// non-decreasing tMs.
void verify_sequence(const std::vector<LogEvent>& events);

/// Rebuilds the final state from the logged inputs alone: SESSION_START's
/// context, every DEVICE_INTERACTION and TASK_ABORTED, with the clock
/// advanced to each input's tMs and finally to the last event's tMs. Fails
/// on a malformed prefix, a scenario mismatch, or an input whose replayed
/// outcome differs from the logged one.
sim::StateSnapshot replay(std::shared_ptr<const CompiledScenario> scenario, const std::vector<LogEvent>& events);

}  // namespace shine::log
