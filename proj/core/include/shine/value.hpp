#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <variant>

namespace shine {

/// A scalar carried by device properties, context variables and condition
/// literals. Numbers are always doubles; JSON integers are widened on read.
using Literal = std::variant<bool, double, std::string>;

enum class LiteralKind { boolean, number, string };

inline LiteralKind kind_of(const Literal& v) {
  return static_cast<LiteralKind>(v.index());
}

std::string_view to_string(LiteralKind kind);

/// Shortest decimal form that round-trips: 15.50 -> "15.5", 10.0 -> "10".
std::string format_number(double v);

/// Canonical text used by explanation templates and human-readable output.
/// Booleans render as on/off when `on_off` is set, else true/false.
std::string format_literal(const Literal& v, bool on_off = false);

nlohmann::json to_json(const Literal& v);

/// Returns false (leaving `out` untouched) for arrays, objects and null.
bool from_json(const nlohmann::json& j, Literal& out);

}  // namespace shine
