#include "shine/scenario/validate.hpp"

#include "shine/net/url.hpp"
#include "shine/scenario/template.hpp"

#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace shine {

std::size_t ValidationReport::error_count() const {
  std::size_t n = 0;
  for (const auto& i : issues) n += i.severity == Severity::error;
  return n;
}

bool path_within(const std::string& path, const std::string& prefix) {
  if (prefix.empty()) return true;
  if (path.compare(0, prefix.size(), prefix) != 0) return false;
  if (path.size() == prefix.size()) return true;
  char next = path[prefix.size()];
  return next == '.' || next == '[';
}

bool ValidationReport::has_error_under(const std::string& prefix) const {
  for (const auto& i : issues) {
    if (i.severity == Severity::error && path_within(i.path, prefix)) return true;
  }
  return false;
}

namespace {

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

class Validator {
 public:
  explicit Validator(const ScenarioSpec& spec) : s_(spec) {}

  ValidationReport run() {
    check_unique_ids();
    check_context();
    check_rooms();
    check_devices();
    check_rules();
    check_triggers();
    check_tasks();
    check_explanations();
    check_config();
    report_.ok = report_.error_count() == 0;
    return std::move(report_);
  }

 private:
  void error(std::string path, std::string message) {
    report_.issues.push_back({Severity::error, std::move(path), std::move(message)});
  }
  void warning(std::string path, std::string message) {
    report_.issues.push_back({Severity::warning, std::move(path), std::move(message)});
  }

  template <typename T>
  void unique(const std::vector<T>& items, const std::string& list, std::string_view what) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& id = items[i].id;
      if (!is_identifier(id)) {
        error(at(list, i) + ".id", std::string(what) + " id '" + id + "' is not a valid identifier");
      } else if (!seen.insert(id).second) {
        error(at(list, i) + ".id", "duplicate " + std::string(what) + " id '" + id + "'");
      }
    }
  }

  void check_unique_ids() {
    unique(s_.rooms, "rooms", "room");
    unique(s_.devices, "devices", "device");
    unique(s_.rules, "rules", "rule");
    unique(s_.triggers, "triggers", "trigger");
    unique(s_.tasks, "tasks", "task");
    unique(s_.explanations, "explanations", "explanation");
  }

  void check_context() {
    for (const auto& [name, _] : s_.contextDefaults) {
      if (!is_identifier(name)) {
        error("contextDefaults." + name, "context variable name '" + name + "' is not a valid identifier");
      }
    }
  }

  std::optional<std::size_t> room_index(const std::string& id) const {
    for (std::size_t i = 0; i < s_.rooms.size(); ++i) {
      if (s_.rooms[i].id == id) return i;
    }
    return std::nullopt;
  }

  void check_rooms() {
    if (s_.rooms.empty()) {
      error("rooms", "a scenario needs at least one room");
      return;
    }
    std::vector<std::set<std::size_t>> adjacency(s_.rooms.size());
    for (std::size_t i = 0; i < s_.rooms.size(); ++i) {
      const auto& room = s_.rooms[i];
      std::string path = at("rooms", i);
      bool degenerate = room.bounds.width < 1 || room.bounds.height < 1;
      if (degenerate) {
        error(path + ".bounds", "room bounds must be at least 1x1 tiles");
      }
      for (std::size_t d = 0; d < room.doors.size(); ++d) {
        const auto& door = room.doors[d];
        std::string dpath = at(path + ".doors", d);
        auto target = room_index(door.target);
        if (!target) {
          error(dpath + ".target", "door target room '" + door.target + "' does not exist");
        } else if (*target == i) {
          error(dpath + ".target", "door leads back into its own room");
        } else {
          adjacency[i].insert(*target);
          adjacency[*target].insert(i);
          const auto& tb = s_.rooms[*target].bounds;
          TileRect grown{tb.x - 1, tb.y - 1, tb.width + 2, tb.height + 2};
          if (!degenerate && room.bounds.on_boundary(door.position) && !grown.contains(door.position)) {
            warning(dpath + ".position", "door is not adjacent to room '" + door.target + "'");
          }
        }
        if (!degenerate && !room.bounds.on_boundary(door.position)) {
          error(dpath + ".position", "door position (" + std::to_string(door.position.x) + ", " +
                                         std::to_string(door.position.y) + ") is not on the room boundary");
        }
      }
    }

    std::vector<bool> reached(s_.rooms.size(), false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    reached[0] = true;
    while (!frontier.empty()) {
      auto r = frontier.front();
      frontier.pop();
      for (auto n : adjacency[r]) {
        if (!reached[n]) {
          reached[n] = true;
          frontier.push(n);
        }
      }
    }
    for (std::size_t i = 1; i < s_.rooms.size(); ++i) {
      if (!reached[i]) {
        error(at("rooms", i), "door graph disconnected: room '" + s_.rooms[i].id +
                                  "' is unreachable from '" + s_.rooms[0].id + "'");
      }
    }
  }

  void check_property(const PropertySpec& p, const std::string& path) {
    if (!is_identifier(p.name)) error(path + ".name", "property name '" + p.name + "' is not a valid identifier");
    bool domain_ok = true;
    switch (p.kind) {
      case PropertyKind::boolean:
        break;
      case PropertyKind::enumeration: {
        std::set<std::string> distinct(p.values.begin(), p.values.end());
        if (distinct.size() != p.values.size()) {
          error(path + ".values", "enumeration values must be distinct");
          domain_ok = false;
        }
        if (distinct.size() < 2) {
          error(path + ".values", "enumeration needs at least 2 distinct values");
          domain_ok = false;
        }
        break;
      }
      case PropertyKind::numeric: {
        if (!(p.min < p.max)) {
          error(path + ".max", "numeric property needs min < max");
          domain_ok = false;
        }
        if (!(p.step > 0)) {
          error(path + ".step", "numeric step must be positive");
          domain_ok = false;
        } else if (domain_ok) {
          double q = (p.max - p.min) / p.step;
          if (std::fabs(q - std::round(q)) > 1e-9 * std::max(1.0, q)) {
            error(path + ".step", "(max - min) must be an integer multiple of step");
            domain_ok = false;
          }
        }
        break;
      }
    }
    if (domain_ok && !p.accepts(p.initial)) {
      error(path + ".initial", "initial value " + format_literal(p.initial) + " is outside the property domain");
    }
    if (p.widgetHint) {
      bool fits = false;
      switch (*p.widgetHint) {
        case WidgetHint::toggle: fits = p.kind == PropertyKind::boolean; break;
        case WidgetHint::dropdown:
        case WidgetHint::radio: fits = p.kind == PropertyKind::enumeration; break;
        case WidgetHint::slider:
        case WidgetHint::stepper: fits = p.kind == PropertyKind::numeric; break;
      }
      if (!fits) {
        error(path + ".widgetHint", "widget hint '" + std::string(to_string(*p.widgetHint)) +
                                        "' does not fit a " + std::string(to_string(p.kind)) + " property");
      }
    }
  }

  void check_devices() {
    for (std::size_t i = 0; i < s_.devices.size(); ++i) {
      const auto& d = s_.devices[i];
      std::string path = at("devices", i);
      auto room = room_index(d.roomId);
      if (!room) {
        error(path + ".roomId", "room '" + d.roomId + "' does not exist");
      } else if (!s_.rooms[*room].bounds.contains(d.position)) {
        error(path + ".position", "device position lies outside room '" + d.roomId + "'");
      }
      std::set<std::string> names;
      for (std::size_t p = 0; p < d.properties.size(); ++p) {
        std::string ppath = at(path + ".properties", p);
        if (!names.insert(d.properties[p].name).second) {
          error(ppath + ".name", "duplicate property name '" + d.properties[p].name + "'");
        }
        check_property(d.properties[p], ppath);
      }
    }
  }

  void check_condition(const ConditionExpr& expr, const std::string& path) {
    try {
      (void)compile_condition(expr, s_);
    } catch (const ConditionTypeError& e) {
      error(path, e.what());
    }
  }

  void check_target(const std::string& device, const std::string& property, const Literal* value,
                    const std::string& path, const std::string& value_field) {
    const auto* dev = s_.find_device(device);
    if (!dev) {
      error(path + ".deviceId", "device '" + device + "' does not exist");
      return;
    }
    const auto* prop = dev->find_property(property);
    if (!prop) {
      error(path + ".property", "device '" + device + "' has no property '" + property + "'");
      return;
    }
    if (value && !prop->accepts(*value)) {
      error(path + "." + value_field, "value " + format_literal(*value) + " is outside the domain of " +
                                          device + "." + property);
    }
  }

  void check_explanation_ref(const std::optional<std::string>& id, const std::string& path) {
    if (id && !s_.find_explanation(*id)) error(path, "explanation '" + *id + "' does not exist");
  }

  void check_rules() {
    for (std::size_t i = 0; i < s_.rules.size(); ++i) {
      const auto& r = s_.rules[i];
      std::string path = at("rules", i);
      check_condition(r.condition, path + ".condition");
      if (r.kind == RuleKind::action) {
        if (r.actions.empty()) error(path + ".actions", "action rule needs at least one action");
        if (!r.blocks.empty()) error(path + ".blocks", "action rules cannot block interactions");
      } else {
        if (r.blocks.empty()) error(path + ".blocks", "constraint rule needs at least one block entry");
        if (!r.actions.empty()) error(path + ".actions", "constraint rules cannot carry actions");
      }
      for (std::size_t a = 0; a < r.actions.size(); ++a) {
        const auto& act = r.actions[a];
        check_target(act.deviceId, act.property, &act.value, at(path + ".actions", a), "value");
      }
      for (std::size_t b = 0; b < r.blocks.size(); ++b) {
        const auto& blk = r.blocks[b];
        check_target(blk.deviceId, blk.property, blk.blockedValue ? &*blk.blockedValue : nullptr,
                     at(path + ".blocks", b), "blockedValue");
      }
      check_explanation_ref(r.explanationId, path + ".explanationId");
    }
  }

  void check_triggers() {
    for (std::size_t i = 0; i < s_.triggers.size(); ++i) {
      const auto& t = s_.triggers[i];
      std::string path = at("triggers", i);
      if (const auto* a = std::get_if<AtTime>(&t.when)) {
        if (!(a->seconds >= 0)) error(path + ".when.seconds", "trigger time must be >= 0");
      } else {
        const auto& e = std::get<AfterEvent>(t.when);
        if (e.eventType != kDeviceInteractionEvent) {
          error(path + ".when.eventType", "unknown event type '" + e.eventType + "'");
        }
        if (e.deviceId && !s_.find_device(*e.deviceId)) {
          error(path + ".when.deviceId", "device '" + *e.deviceId + "' does not exist");
        }
        if (!(e.delaySeconds >= 0)) error(path + ".when.delaySeconds", "trigger delay must be >= 0");
      }
      if (t.effects.empty()) error(path + ".effects", "trigger needs at least one effect");
      for (std::size_t k = 0; k < t.effects.size(); ++k) {
        std::string epath = at(path + ".effects", k);
        if (const auto* act = std::get_if<ActionSpec>(&t.effects[k])) {
          check_target(act->deviceId, act->property, &act->value, epath, "value");
        } else {
          const auto& env = std::get<EnvironmentSet>(t.effects[k]);
          auto it = s_.contextDefaults.find(env.name);
          if (it == s_.contextDefaults.end()) {
            error(epath + ".context", "context variable '" + env.name + "' is not declared");
          } else if (kind_of(it->second) != kind_of(env.value)) {
            error(epath + ".value", "context variable '" + env.name + "' holds a " +
                                        std::string(to_string(kind_of(it->second))) + ", not a " +
                                        std::string(to_string(kind_of(env.value))));
          }
        }
      }
      check_explanation_ref(t.explanationId, path + ".explanationId");
    }
  }

  void check_tasks() {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < s_.tasks.size(); ++i) index.emplace(s_.tasks[i].id, i);

    for (std::size_t i = 0; i < s_.tasks.size(); ++i) {
      const auto& t = s_.tasks[i];
      std::string path = at("tasks", i);
      check_condition(t.goal, path + ".goal");
      if (t.timeoutSeconds && !(*t.timeoutSeconds > 0)) {
        error(path + ".timeoutSeconds", "task timeout must be positive");
      }
      if (!t.dependsOn) continue;
      if (!index.count(*t.dependsOn)) {
        error(path + ".dependsOn", "task '" + *t.dependsOn + "' does not exist");
        continue;
      }
      // Each task has at most one dependency, so a cycle shows up as a walk
      // that revisits a task.
      std::set<std::size_t> visited{i};
      std::optional<std::string> next = t.dependsOn;
      while (next) {
        auto it = index.find(*next);
        if (it == index.end()) break;
        if (!visited.insert(it->second).second) {
          if (it->second == i) error(path + ".dependsOn", "task dependency cycle through '" + t.id + "'");
          break;
        }
        next = s_.tasks[it->second].dependsOn;
      }
    }
  }

  void check_explanations() {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < s_.explanations.size(); ++i) index.emplace(s_.explanations[i].id, i);

    for (std::size_t i = 0; i < s_.explanations.size(); ++i) {
      const auto& e = s_.explanations[i];
      std::string path = at("explanations", i);
      if (e.templateText.empty()) error(path + ".template", "template text must not be empty");
      try {
        for (const auto& ph : scan_placeholders(e.templateText)) {
          if (ph.kind == Placeholder::Kind::context) {
            if (!s_.contextDefaults.count(ph.first)) {
              error(path + ".template", "placeholder refers to unknown context variable '" + ph.first + "'");
            }
          } else {
            const auto* dev = s_.find_device(ph.first);
            if (!dev) {
              error(path + ".template", "placeholder refers to unknown device '" + ph.first + "'");
            } else if (!dev->find_property(ph.second)) {
              error(path + ".template",
                    "placeholder refers to unknown property '" + ph.first + "." + ph.second + "'");
            }
          }
        }
      } catch (const TemplateError& err) {
        error(path + ".template", err.what());
      }
      for (std::size_t f = 0; f < e.followUps.size(); ++f) {
        const auto& fu = e.followUps[f];
        std::string fpath = at(path + ".followUps", f);
        if (fu.keywords.empty()) error(fpath + ".keywords", "follow-up needs at least one keyword");
        if (!index.count(fu.explanationId)) {
          error(fpath + ".explanationId", "explanation '" + fu.explanationId + "' does not exist");
        }
      }
      if (reaches_cycle(i, index)) {
        error(path + ".followUps", "follow-up chain starting at '" + e.id + "' contains a cycle");
      }
      if (e.external && !s_.explanationConfig.engineEndpoint) {
        warning(path + ".external", "external explanation without an engine endpoint always uses its template");
      }
    }
  }

  bool reaches_cycle(std::size_t start, const std::map<std::string, std::size_t>& index) const {
    enum class Mark { none, active, done };
    std::vector<Mark> mark(s_.explanations.size(), Mark::none);
    struct Frame {
      std::size_t node;
      std::size_t next_edge;
    };
    std::vector<Frame> stack{{start, 0}};
    mark[start] = Mark::active;
    while (!stack.empty()) {
      auto& top = stack.back();
      const auto& follow = s_.explanations[top.node].followUps;
      if (top.next_edge == follow.size()) {
        mark[top.node] = Mark::done;
        stack.pop_back();
        continue;
      }
      auto it = index.find(follow[top.next_edge++].explanationId);
      if (it == index.end()) continue;
      if (mark[it->second] == Mark::active) return true;
      if (mark[it->second] == Mark::none) {
        mark[it->second] = Mark::active;
        stack.push_back({it->second, 0});
      }
    }
    return false;
  }

  void check_config() {
    const auto& c = s_.explanationConfig;
    if (c.engineTimeoutMs <= 0) error("explanationConfig.engineTimeoutMs", "engine timeout must be positive");
    if (c.engineEndpoint) {
      auto url = net::parse_url(c.engineEndpoint->url);
      bool ok = url.has_value();
      if (ok) {
        bool ws = url->scheme == "ws" || url->scheme == "wss";
        ok = (c.engineEndpoint->transport == EngineTransport::websocket) == ws;
      }
      if (!ok) {
        error("explanationConfig.engineEndpoint.url",
              "engine URL '" + c.engineEndpoint->url + "' is not a well-formed " +
                  (c.engineEndpoint->transport == EngineTransport::rest ? "http(s)" : "ws(s)") + " URL");
      }
    }
  }

  const ScenarioSpec& s_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_scenario(const ScenarioSpec& spec) { return Validator(spec).run(); }

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json issues = nlohmann::json::array();
  for (const auto& i : report.issues) {
    issues.push_back({{"severity", i.severity == Severity::error ? "error" : "warning"},
                      {"path", i.path},
                      {"message", i.message}});
  }
  return {{"ok", report.ok}, {"issues", std::move(issues)}};
}

std::string to_text(const ValidationReport& report) {
  std::ostringstream out;
  for (const auto& i : report.issues) {
    out << (i.severity == Severity::error ? "error" : "warning") << ": " << i.path << ": " << i.message
        << "\n";
  }
  out << (report.ok ? "OK" : "INVALID") << " (" << report.error_count() << " error(s), "
      << report.issues.size() - report.error_count() << " warning(s))\n";
  return out.str();
}

}  // namespace shine
