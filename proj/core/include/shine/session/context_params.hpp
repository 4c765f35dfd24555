#pragma once

#include "shine/scenario/compiled.hpp"
#include "shine/value.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shine::session {

class ContextParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-session personalization carried in the `context` parameter as
/// base64url-encoded JSON: {"deliveryMode", "contextVars", "userContext"}.
struct SessionContextParams {
  std::optional<DeliveryMode> deliveryMode;
  std::map<std::string, Literal> contextVars;
  nlohmann::json userContext = nlohmann::json::object();  // flat object of scalars

  bool operator==(const SessionContextParams&) const = default;
};

std::string base64url_encode(std::string_view bytes);
/// Accepts the URL-safe alphabet with or without '=' padding.
std::string base64url_decode(std::string_view text);

SessionContextParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionContextParams& p);

/// An empty string decodes to defaults. Throws ContextParamError naming the
/// offending key or encoding problem.
SessionContextParams decode_context_param(std::string_view param);
std::string encode_context_param(const SessionContextParams& p);

/// Every context var must exist in the scenario with a matching kind.
void check_against(const SessionContextParams& p, const CompiledScenario& scenario);

}  // namespace shine::session
