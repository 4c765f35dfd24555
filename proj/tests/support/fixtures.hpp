#pragma once

#include "shine/scenario/compiled.hpp"
#include "shine/scenario/parser.hpp"
#include "shine/scenario/spec.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>

#ifndef SHINE_SCENARIO_DIR
#error "SHINE_SCENARIO_DIR must point at the bundled scenarios"
#endif
#ifndef SHINE_BOT_DIR
#error "SHINE_BOT_DIR must point at the bundled bot scripts"
#endif

namespace shine::testing {

inline std::string scenario_dir() { return SHINE_SCENARIO_DIR; }
inline std::string bot_dir() { return SHINE_BOT_DIR; }
inline std::string default_scenario_path() { return scenario_dir() + "/default.scenario.json"; }

std::string read_file(const std::string& path);
nlohmann::json default_scenario_json();
ScenarioSpec default_scenario();
std::shared_ptr<const CompiledScenario> default_compiled();

/// Parse, validate (must pass) and compile a scenario document.
std::shared_ptr<const CompiledScenario> compile_json(const nlohmann::json& doc);

/// The bundled scenario with exp_heater_blocked served by an external
/// engine at `url`.
nlohmann::json external_variant(const std::string& url, const std::string& transport = "rest");

/// Smallest legal document: one room, nothing else.
std::string minimal_document();

}  // namespace shine::testing
