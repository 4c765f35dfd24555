#pragma once

#include "shine/session/context_params.hpp"
#include "shine/value.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace shine::bot {

namespace step {
struct Wait {
  std::int64_t ms = 0;
};
struct Interact {
  std::string deviceId;
  std::string property;
  Literal value;
};
struct RequestExplanation {
  std::optional<std::string> deviceId;
};
struct Query {
  std::string text;
};
/// Rates the given instance, or the most recently received explanation.
struct Rate {
  std::string value;  // "up" | "down"
  std::optional<std::string> instanceId;
};
struct Telemetry {
  nlohmann::json data;
};
struct AbortTask {
  std::string taskId;
};
/// The previous Interact was blocked (optionally by this rule).
struct ExpectBlocked {
  std::optional<std::string> ruleId;
};
struct ExpectTask {
  std::string taskId;
  std::string status;
};
/// The most recently received explanation matches.
struct ExpectExplanation {
  std::optional<std::string> text;
  std::optional<std::string> source;
};
struct Complete {};
}  // namespace step

using Step = std::variant<step::Wait, step::Interact, step::RequestExplanation, step::Query, step::Rate,
                          step::Telemetry, step::AbortTask, step::ExpectBlocked, step::ExpectTask,
                          step::ExpectExplanation, step::Complete>;

struct BotScript {
  std::string name;
  std::string participantId = "bot";
  session::SessionContextParams context;
  std::vector<Step> steps;
};

class BotScriptError : public std::invalid_argument {
 public:
  BotScriptError(std::string path, const std::string& message)
      : std::invalid_argument(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// `{"name", "participantId"?, "context"?, "steps": [{"op": ...}, ...]}`.
/// Complete must appear exactly once, as the last step.
BotScript parse_bot_script(const nlohmann::json& doc);
BotScript load_bot_script(const std::string& path);

std::string describe(const Step& s);

}  // namespace shine::bot
