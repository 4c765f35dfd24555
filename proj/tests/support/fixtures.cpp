#include "fixtures.hpp"

#include "rule_oracle.hpp"

#include "shine/scenario/validate.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shine::testing {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json default_scenario_json() { return nlohmann::json::parse(read_file(default_scenario_path())); }

ScenarioSpec default_scenario() { return load_scenario_file(default_scenario_path()); }

std::shared_ptr<const CompiledScenario> default_compiled() {
  static const auto compiled = compile(default_scenario());
  return compiled;
}

std::shared_ptr<const CompiledScenario> compile_json(const nlohmann::json& doc) {
  ScenarioSpec spec = parse_scenario_json(doc);
  auto report = validate_scenario(spec);
  if (!report.ok) throw std::invalid_argument(to_text(report));
  return compile(spec);
}

nlohmann::json external_variant(const std::string& url, const std::string& transport) {
  auto doc = default_scenario_json();
  for (auto& e : doc["explanations"]) {
    if (e["id"] == "exp_heater_blocked") e["external"] = true;
  }
  doc["explanationConfig"]["engineEndpoint"] = {{"url", url}, {"transport", transport}};
  return doc;
}

std::string minimal_document() {
  return R"({"schemaVersion": 1, "id": "minimal",
             "rooms": [{"id": "hall", "bounds": {"x": 0, "y": 0, "width": 1, "height": 1}}]})";
}

ScenarioSpec to_scenario(const RuleSystem& sys) {
  ScenarioSpec s;
  s.id = "random";
  s.rooms.push_back(RoomSpec{"room", TileRect{0, 0, 8, 8}, {}});
  for (int d = 0; d < sys.devices; ++d) {
    DeviceSpec dev;
    dev.id = RuleSystem::device_id(d);
    dev.type = "switch";
    dev.roomId = "room";
    dev.position = TilePos{d, 0};
    for (int p = 0; p < sys.props_per_device[d]; ++p) {
      PropertySpec prop;
      prop.name = RuleSystem::prop_name(p);
      prop.kind = PropertyKind::boolean;
      prop.userWritable = true;
      dev.properties.push_back(prop);
    }
    s.devices.push_back(std::move(dev));
  }
  int var = 0;
  for (int d = 0; d < sys.devices; ++d) {
    for (int p = 0; p < sys.props_per_device[d]; ++p, ++var) {
      s.devices[d].properties[p].initial = ((sys.initial >> var) & 1u) != 0;
    }
  }
  for (std::size_t r = 0; r < sys.rules.size(); ++r) {
    RuleSpec rule;
    rule.id = "r" + std::to_string(r);
    rule.kind = RuleKind::action;
    rule.condition = parse_condition(cond_text(sys, sys.rules[r].cond));
    rule.priority = sys.rules[r].priority;
    for (auto [v, value] : sys.rules[r].actions) {
      auto [d, p] = sys.locate(v);
      rule.actions.push_back(ActionSpec{RuleSystem::device_id(d), RuleSystem::prop_name(p), Literal{value}});
    }
    s.rules.push_back(std::move(rule));
  }
  return s;
}

}  // namespace shine::testing
