#pragma once

#include "shine/scenario/spec.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace shine {

enum class Severity { error, warning };

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string path;
  std::string message;
  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;
  bool operator==(const ValidationReport&) const = default;

  std::size_t error_count() const;
  /// True when some error's path equals `prefix` or lies below it
  /// (`rooms[1]` contains `rooms[1].doors[0]` but not `rooms[10]`).
  bool has_error_under(const std::string& prefix) const;
};

/// Checks every structural and referential invariant of a parsed scenario.
/// Pure: the same spec always yields the same report, issues in document order.
ValidationReport validate_scenario(const ScenarioSpec& spec);

nlohmann::json to_json(const ValidationReport& report);
std::string to_text(const ValidationReport& report);

bool path_within(const std::string& path, const std::string& prefix);

}  // namespace shine
