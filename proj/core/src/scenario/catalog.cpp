#include "shine/scenario/catalog.hpp"

#include "shine/scenario/parser.hpp"
#include "shine/scenario/validate.hpp"

#include <algorithm>

namespace shine {

namespace fs = std::filesystem;

std::shared_ptr<const CompiledScenario> load_compiled(const fs::path& file) {
  ScenarioSpec spec = load_scenario_file(file.string());
  auto report = validate_scenario(spec);
  if (!report.ok) throw std::invalid_argument(to_text(report));
  return compile(spec);
}

ScenarioCatalog load_scenario_dir(const fs::path& dir) {
  ScenarioCatalog out;
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    static constexpr std::string_view kSuffix = ".scenario.json";
    if (entry.is_regular_file() && name.size() > kSuffix.size() &&
        name.compare(name.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
      files.push_back(entry.path());
    }
  }
  if (ec) {
    out.warnings.push_back(dir.string() + ": " + ec.message());
    return out;
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      auto compiled = load_compiled(f);
      const std::string& id = compiled->spec().id;
      if (out.scenarios.count(id)) {
        out.warnings.push_back(f.string() + ": duplicate scenario id '" + id + "', skipped");
        continue;
      }
      out.scenarios.emplace(id, std::move(compiled));
    } catch (const std::exception& e) {
      out.warnings.push_back(f.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace shine
