#include "shine/explain/cause.hpp"

#include <stdexcept>

namespace shine::explain {

using nlohmann::json;

namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

std::string str(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw std::invalid_argument(std::string("cause needs string '") + key + "'");
  return it->get<std::string>();
}

}  // namespace

json to_json(const ExplanationCause& c) {
  return std::visit(
      overloaded{
          [](const cause::BlockedInteraction& b) {
            return json{{"type", "blockedInteraction"}, {"ruleId", b.ruleId}, {"deviceId", b.deviceId},
                        {"property", b.property}, {"attemptedValue", shine::to_json(b.attemptedValue)}};
          },
          [](const cause::RuleFired& r) { return json{{"type", "ruleFired"}, {"ruleId", r.ruleId}}; },
          [](const cause::TriggerFired& t) { return json{{"type", "triggerFired"}, {"triggerId", t.triggerId}}; },
          [](const cause::UserRequest& u) {
            json j{{"type", "userRequest"}};
            if (u.deviceId) j["deviceId"] = *u.deviceId;
            return j;
          },
          [](const cause::FollowUpQuery& q) {
            return json{{"type", "followUpQuery"}, {"parentInstanceId", q.parentInstanceId}, {"text", q.text}};
          },
      },
      c);
}

ExplanationCause cause_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("cause must be an object");
  std::string type = str(j, "type");
  if (type == "blockedInteraction") {
    Literal v;
    auto it = j.find("attemptedValue");
    if (it == j.end() || !from_json(*it, v)) throw std::invalid_argument("cause needs scalar 'attemptedValue'");
    return cause::BlockedInteraction{str(j, "ruleId"), str(j, "deviceId"), str(j, "property"), v};
  }
  if (type == "ruleFired") return cause::RuleFired{str(j, "ruleId")};
  if (type == "triggerFired") return cause::TriggerFired{str(j, "triggerId")};
  if (type == "userRequest") {
    cause::UserRequest u;
    if (j.contains("deviceId")) u.deviceId = str(j, "deviceId");
    return u;
  }
  if (type == "followUpQuery") return cause::FollowUpQuery{str(j, "parentInstanceId"), str(j, "text")};
  throw std::invalid_argument("unknown cause type '" + type + "'");
}

}  // namespace shine::explain
