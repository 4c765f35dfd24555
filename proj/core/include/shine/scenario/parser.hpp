#pragma once

#include "shine/scenario/spec.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shine {

inline constexpr int kSchemaVersion = 1;

class ParseError : public std::runtime_error {
 public:
  enum class Kind { syntax, type_mismatch, unknown_field, missing_field };

  ParseError(Kind kind, std::string path, const std::string& message,
             std::optional<std::size_t> byte_offset = std::nullopt);

  Kind kind() const { return kind_; }
  /// Pointer into the document, e.g. `devices[0].properties[0].initial`.
  const std::string& path() const { return path_; }
  /// Set for JSON syntax errors only.
  std::optional<std::size_t> byte_offset() const { return offset_; }

 private:
  Kind kind_;
  std::string path_;
  std::optional<std::size_t> offset_;
};

std::string_view to_string(ParseError::Kind kind);

/// Parses a `.scenario.json` document. Unknown fields are rejected, and
/// literal types are checked where the document alone determines them
/// (property initial values, enumeration members). Cross-references are left
/// to validate_scenario.
ScenarioSpec parse_scenario(std::string_view text);
ScenarioSpec parse_scenario_json(const nlohmann::json& doc);

/// Inverse of parse_scenario: the output reparses to an equal spec.
nlohmann::json serialize_scenario(const ScenarioSpec& spec);

ScenarioSpec load_scenario_file(const std::string& path);

}  // namespace shine
