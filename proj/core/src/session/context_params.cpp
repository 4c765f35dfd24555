#include "shine/session/context_params.hpp"

#include <sodium.h>

namespace shine::session {

using nlohmann::json;

namespace {

constexpr int kVariant = sodium_base64_VARIANT_URLSAFE_NO_PADDING;

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium failed to initialize");
}

}  // namespace

std::string base64url_encode(std::string_view bytes) {
  ensure_sodium();
  std::string out(sodium_base64_encoded_len(bytes.size(), kVariant), '\0');
  sodium_bin2base64(out.data(), out.size(), reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
                    kVariant);
  out.resize(std::char_traits<char>::length(out.c_str()));
  return out;
}

std::string base64url_decode(std::string_view text) {
  ensure_sodium();
  while (!text.empty() && text.back() == '=') text.remove_suffix(1);
  std::string out(text.size() * 3 / 4 + 3, '\0');
  std::size_t len = 0;
  const char* end = nullptr;
  int rc = sodium_base642bin(reinterpret_cast<unsigned char*>(out.data()), out.size(), text.data(), text.size(),
                             nullptr, &len, &end, kVariant);
  if (rc != 0 || end != text.data() + text.size()) throw ContextParamError("context parameter is not valid base64url");
  out.resize(len);
  return out;
}

SessionContextParams params_from_json(const json& j) {
  if (!j.is_object()) throw ContextParamError("context parameter must decode to a JSON object");
  SessionContextParams p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "deliveryMode") {
      auto mode = v.is_string() ? delivery_mode_from_string(v.get<std::string>()) : std::nullopt;
      if (!mode) throw ContextParamError("deliveryMode must be one of push, pull, interactive");
      p.deliveryMode = mode;
    } else if (key == "contextVars") {
      if (!v.is_object()) throw ContextParamError("contextVars must be an object");
      for (auto c = v.begin(); c != v.end(); ++c) {
        Literal lit;
        if (!from_json(c.value(), lit)) throw ContextParamError("contextVars." + c.key() + " must be a scalar");
        p.contextVars[c.key()] = lit;
      }
    } else if (key == "userContext") {
      if (!v.is_object()) throw ContextParamError("userContext must be an object");
      for (auto c = v.begin(); c != v.end(); ++c) {
        if (!c.value().is_primitive() || c.value().is_null()) {
          throw ContextParamError("userContext." + c.key() + " must be a string, number or boolean");
        }
      }
      p.userContext = v;
    } else {
      throw ContextParamError("unknown context parameter key '" + key + "'");
    }
  }
  return p;
}

json to_json(const SessionContextParams& p) {
  json j = json::object();
  if (p.deliveryMode) j["deliveryMode"] = to_string(*p.deliveryMode);
  if (!p.contextVars.empty()) {
    json vars = json::object();
    for (const auto& [k, v] : p.contextVars) vars[k] = shine::to_json(v);
    j["contextVars"] = std::move(vars);
  }
  if (!p.userContext.empty()) j["userContext"] = p.userContext;
  return j;
}

SessionContextParams decode_context_param(std::string_view param) {
  if (param.empty()) return {};
  std::string raw = base64url_decode(param);
  json j = json::parse(raw, nullptr, false);
  if (j.is_discarded()) throw ContextParamError("context parameter does not hold valid JSON");
  return params_from_json(j);
}

std::string encode_context_param(const SessionContextParams& p) { return base64url_encode(to_json(p).dump()); }

void check_against(const SessionContextParams& p, const CompiledScenario& scenario) {
  const auto& defaults = scenario.spec().contextDefaults;
  for (const auto& [name, value] : p.contextVars) {
    auto it = defaults.find(name);
    if (it == defaults.end()) throw ContextParamError("unknown context variable '" + name + "'");
    if (kind_of(it->second) != kind_of(value)) {
      throw ContextParamError("context variable '" + name + "' expects a " + std::string(to_string(kind_of(it->second))));
    }
  }
}

}  // namespace shine::session
