#pragma once

#include "shine/scenario/compiled.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace shine {

struct ScenarioCatalog {
  std::map<std::string, std::shared_ptr<const CompiledScenario>> scenarios;  // by scenario id
  std::vector<std::string> warnings;  // one per skipped file
};

/// Parses, validates and compiles every `*.scenario.json` in `dir`
/// (non-recursive). Files that fail, or repeat an id, are skipped with a
/// warning.
ScenarioCatalog load_scenario_dir(const std::filesystem::path& dir);

/// Parse + validate + compile one file. Throws ParseError, or
/// std::invalid_argument carrying the validation report text.
std::shared_ptr<const CompiledScenario> load_compiled(const std::filesystem::path& file);

}  // namespace shine
