#include "shine/bot/script.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace shine::bot {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {}

  std::string str(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || !it->is_string()) throw BotScriptError(path_ + "." + key, "expected a string");
    return it->get<std::string>();
  }
  std::optional<std::string> opt_str(const char* key) {
    if (!obj_.contains(key)) return std::nullopt;
    return str(key);
  }
  std::int64_t non_negative(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || !it->is_number_integer() || it->get<std::int64_t>() < 0) {
      throw BotScriptError(path_ + "." + key, "expected a non-negative integer");
    }
    return it->get<std::int64_t>();
  }
  Literal scalar(const char* key) {
    seen_.insert(key);
    Literal v;
    auto it = obj_.find(key);
    if (it == obj_.end() || !from_json(*it, v)) throw BotScriptError(path_ + "." + key, "expected a scalar");
    return v;
  }
  const json& any(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) throw BotScriptError(path_ + "." + key, "missing");
    return *it;
  }
  void done() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw BotScriptError(path_ + "." + it.key(), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_{"op"};
};

Step parse_step(const json& j, const std::string& path) {
  if (!j.is_object()) throw BotScriptError(path, "step must be an object");
  Reader r(j, path);
  std::string op = r.str("op");
  Step s;
  if (op == "wait") {
    s = step::Wait{r.non_negative("ms")};
  } else if (op == "interact") {
    step::Interact i;
    i.deviceId = r.str("deviceId");
    i.property = r.str("property");
    i.value = r.scalar("value");
    s = i;
  } else if (op == "request_explanation") {
    s = step::RequestExplanation{r.opt_str("deviceId")};
  } else if (op == "query") {
    s = step::Query{r.str("text")};
  } else if (op == "rate") {
    step::Rate rate{r.str("value"), r.opt_str("instanceId")};
    if (rate.value != "up" && rate.value != "down") throw BotScriptError(path + ".value", "expected up or down");
    s = rate;
  } else if (op == "telemetry") {
    const json& data = r.any("data");
    if (!data.is_object()) throw BotScriptError(path + ".data", "expected an object");
    s = step::Telemetry{data};
  } else if (op == "abort_task") {
    s = step::AbortTask{r.str("taskId")};
  } else if (op == "expect_blocked") {
    s = step::ExpectBlocked{r.opt_str("ruleId")};
  } else if (op == "expect_task") {
    step::ExpectTask t{r.str("taskId"), r.str("status")};
    static const std::set<std::string> kStatuses{"locked", "active", "completed", "timedOut", "aborted"};
    if (!kStatuses.count(t.status)) throw BotScriptError(path + ".status", "unknown task status '" + t.status + "'");
    s = t;
  } else if (op == "expect_explanation") {
    s = step::ExpectExplanation{r.opt_str("text"), r.opt_str("source")};
  } else if (op == "complete") {
    s = step::Complete{};
  } else {
    throw BotScriptError(path + ".op", "unknown op '" + op + "'");
  }
  r.done();
  return s;
}

}  // namespace

BotScript parse_bot_script(const json& doc) {
  if (!doc.is_object()) throw BotScriptError("$", "bot script must be an object");
  BotScript b;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (key == "name") {
      if (!it->is_string()) throw BotScriptError("name", "expected a string");
      b.name = it->get<std::string>();
    } else if (key == "participantId") {
      if (!it->is_string() || it->get<std::string>().empty()) {
        throw BotScriptError("participantId", "expected a non-empty string");
      }
      b.participantId = it->get<std::string>();
    } else if (key == "context") {
      try {
        b.context = session::params_from_json(*it);
      } catch (const session::ContextParamError& e) {
        throw BotScriptError("context", e.what());
      }
    } else if (key == "steps") {
      if (!it->is_array()) throw BotScriptError("steps", "expected an array");
      for (std::size_t i = 0; i < it->size(); ++i) {
        b.steps.push_back(parse_step((*it)[i], "steps[" + std::to_string(i) + "]"));
      }
    } else {
      throw BotScriptError(key, "unknown field");
    }
  }
  for (std::size_t i = 0; i < b.steps.size(); ++i) {
    bool complete = std::holds_alternative<step::Complete>(b.steps[i]);
    bool last = i + 1 == b.steps.size();
    if (complete && !last) {
      throw BotScriptError("steps[" + std::to_string(i) + "]", "complete must be the last step");
    }
  }
  if (b.steps.empty() || !std::holds_alternative<step::Complete>(b.steps.back())) {
    throw BotScriptError("steps", "script must end with a complete step");
  }
  return b;
}

BotScript load_bot_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw BotScriptError("$", "not valid JSON");
  return parse_bot_script(doc);
}

std::string describe(const Step& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, step::Wait>) return "wait " + std::to_string(v.ms) + "ms";
        else if constexpr (std::is_same_v<T, step::Interact>)
          return "interact " + v.deviceId + "." + v.property + " := " + format_literal(v.value);
        else if constexpr (std::is_same_v<T, step::RequestExplanation>)
          return "request_explanation" + (v.deviceId ? " " + *v.deviceId : std::string());
        else if constexpr (std::is_same_v<T, step::Query>) return "query \"" + v.text + "\"";
        else if constexpr (std::is_same_v<T, step::Rate>) return "rate " + v.value;
        else if constexpr (std::is_same_v<T, step::Telemetry>) return "telemetry";
        else if constexpr (std::is_same_v<T, step::AbortTask>) return "abort_task " + v.taskId;
        else if constexpr (std::is_same_v<T, step::ExpectBlocked>) return "expect_blocked";
        else if constexpr (std::is_same_v<T, step::ExpectTask>) return "expect_task " + v.taskId + " " + v.status;
        else if constexpr (std::is_same_v<T, step::ExpectExplanation>) return "expect_explanation";
        else return "complete";
      },
      s);
}

}  // namespace shine::bot
