#include "shine/value.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace shine {

std::string_view to_string(LiteralKind kind) {
  switch (kind) {
    case LiteralKind::boolean: return "boolean";
    case LiteralKind::number: return "number";
    case LiteralKind::string: return "string";
  }
  return "?";
}

std::string format_number(double v) {
  if (v == 0.0) return "0";  // also folds -0
  // Fixed notation keeps sensor-style values readable (1e6 -> "1000000").
  std::array<char, 400> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

std::string format_literal(const Literal& v, bool on_off) {
  if (const auto* b = std::get_if<bool>(&v)) {
    if (on_off) return *b ? "on" : "off";
    return *b ? "true" : "false";
  }
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return std::get<std::string>(v);
}

nlohmann::json to_json(const Literal& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

bool from_json(const nlohmann::json& j, Literal& out) {
  if (j.is_boolean()) {
    out = j.get<bool>();
  } else if (j.is_number()) {
    double d = j.get<double>();
    if (!std::isfinite(d)) return false;
    out = d;
  } else if (j.is_string()) {
    out = j.get<std::string>();
  } else {
    return false;
  }
  return true;
}

}  // namespace shine
