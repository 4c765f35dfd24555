#include "shine/scenario/parser.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace shine {

using nlohmann::json;

ParseError::ParseError(Kind kind, std::string path, const std::string& message,
                       std::optional<std::size_t> byte_offset)
    : std::runtime_error((path.empty() ? std::string("<document>") : path) + ": " + message),
      kind_(kind),
      path_(std::move(path)),
      offset_(byte_offset) {}

std::string_view to_string(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::syntax: return "syntax";
    case ParseError::Kind::type_mismatch: return "type_mismatch";
    case ParseError::Kind::unknown_field: return "unknown_field";
    case ParseError::Kind::missing_field: return "missing_field";
  }
  return "?";
}

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const char* json_type(const json& j) { return j.type_name(); }

[[noreturn]] void fail_type(const std::string& path, std::string_view expected, const json& got) {
  throw ParseError(ParseError::Kind::type_mismatch, path,
                   "expected " + std::string(expected) + ", got " + json_type(got));
}

/// Typed access to one JSON object. Rejects keys outside `allowed` up front.
class Fields {
 public:
  Fields(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail_type(path_, "object", j);
    for (const auto& [key, _] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ParseError(ParseError::Kind::unknown_field, join(path_, key),
                         "unknown field '" + key + "'");
      }
    }
  }

  const std::string& path() const { return path_; }
  std::string path(std::string_view key) const { return join(path_, key); }

  const json* find(std::string_view key) const {
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(std::string_view key) const {
    if (const json* v = find(key)) return *v;
    throw ParseError(ParseError::Kind::missing_field, path(key),
                     "missing required field '" + std::string(key) + "'");
  }

  std::string string(std::string_view key) const { return as_string(require(key), path(key)); }

  std::optional<std::string> opt_string(std::string_view key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return as_string(*v, path(key));
  }

  double number(std::string_view key) const { return as_number(require(key), path(key)); }

  std::optional<double> opt_number(std::string_view key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return as_number(*v, path(key));
  }

  std::int64_t integer(std::string_view key) const { return as_integer(require(key), path(key)); }

  std::optional<std::int64_t> opt_integer(std::string_view key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return as_integer(*v, path(key));
  }

  bool boolean(std::string_view key, bool fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail_type(path(key), "boolean", *v);
    return v->get<bool>();
  }

  Literal literal(std::string_view key) const { return as_literal(require(key), path(key)); }

  template <typename Fn>
  void each(std::string_view key, bool required, Fn&& fn) const {
    const json* v = required ? &require(key) : find(key);
    if (!v) return;
    if (!v->is_array()) fail_type(path(key), "array", *v);
    for (std::size_t i = 0; i < v->size(); ++i) fn((*v)[i], at(path(key), i), i);
  }

  static std::string as_string(const json& v, const std::string& p) {
    if (!v.is_string()) fail_type(p, "string", v);
    return v.get<std::string>();
  }
  static double as_number(const json& v, const std::string& p) {
    if (!v.is_number()) fail_type(p, "number", v);
    return v.get<double>();
  }
  static std::int64_t as_integer(const json& v, const std::string& p) {
    if (!v.is_number_integer()) fail_type(p, "integer", v);
    return v.get<std::int64_t>();
  }
  static Literal as_literal(const json& v, const std::string& p) {
    Literal out;
    if (!from_json(v, out)) fail_type(p, "boolean, number or string", v);
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

int as_int(std::int64_t v, const std::string& p) {
  if (v < INT32_MIN || v > INT32_MAX) {
    throw ParseError(ParseError::Kind::type_mismatch, p, "integer out of range");
  }
  return static_cast<int>(v);
}

TilePos parse_pos(const json& j, const std::string& path) {
  Fields f(j, path, {"x", "y"});
  return TilePos{as_int(f.integer("x"), f.path("x")), as_int(f.integer("y"), f.path("y"))};
}

ConditionExpr parse_condition_field(const Fields& f, std::string_view key) {
  std::string text = f.string(key);
  try {
    return parse_condition(text);
  } catch (const ConditionSyntaxError& e) {
    throw ParseError(ParseError::Kind::syntax, f.path(key), e.what());
  }
}

RoomSpec parse_room(const json& j, const std::string& path) {
  Fields f(j, path, {"id", "bounds", "doors"});
  RoomSpec room;
  room.id = f.string("id");
  Fields b(f.require("bounds"), f.path("bounds"), {"x", "y", "width", "height"});
  room.bounds.x = as_int(b.integer("x"), b.path("x"));
  room.bounds.y = as_int(b.integer("y"), b.path("y"));
  room.bounds.width = as_int(b.integer("width"), b.path("width"));
  room.bounds.height = as_int(b.integer("height"), b.path("height"));
  f.each("doors", false, [&](const json& d, const std::string& p, std::size_t) {
    Fields df(d, p, {"target", "position"});
    room.doors.push_back(DoorSpec{df.string("target"), parse_pos(df.require("position"), df.path("position"))});
  });
  return room;
}

PropertySpec parse_property(const json& j, const std::string& path) {
  Fields f(j, path,
           {"name", "kind", "values", "min", "max", "step", "initial", "userWritable", "widgetHint"});
  PropertySpec p;
  p.name = f.string("name");
  std::string kind = f.string("kind");
  if (kind == "boolean") {
    p.kind = PropertyKind::boolean;
  } else if (kind == "enumeration") {
    p.kind = PropertyKind::enumeration;
  } else if (kind == "numeric") {
    p.kind = PropertyKind::numeric;
  } else {
    throw ParseError(ParseError::Kind::type_mismatch, f.path("kind"),
                     "unknown property kind '" + kind + "' (expected boolean, enumeration or numeric)");
  }

  auto reject = [&](std::string_view key) {
    if (f.find(key)) {
      throw ParseError(ParseError::Kind::unknown_field, f.path(key),
                       "field '" + std::string(key) + "' does not apply to " + kind + " properties");
    }
  };
  if (p.kind == PropertyKind::enumeration) {
    f.each("values", true, [&](const json& v, const std::string& vp, std::size_t) {
      p.values.push_back(Fields::as_string(v, vp));
    });
  } else {
    reject("values");
  }
  if (p.kind == PropertyKind::numeric) {
    p.min = f.number("min");
    p.max = f.number("max");
    p.step = f.number("step");
  } else {
    reject("min");
    reject("max");
    reject("step");
  }

  p.initial = f.literal("initial");
  if (kind_of(p.initial) != p.literal_kind()) {
    throw ParseError(ParseError::Kind::type_mismatch, f.path("initial"),
                     "initial value of " + kind + " property must be a " +
                         std::string(to_string(p.literal_kind())) + ", got " +
                         std::string(to_string(kind_of(p.initial))));
  }
  p.userWritable = f.boolean("userWritable", false);
  if (auto hint = f.opt_string("widgetHint")) {
    p.widgetHint = widget_hint_from_string(*hint);
    if (!p.widgetHint) {
      throw ParseError(ParseError::Kind::type_mismatch, f.path("widgetHint"),
                       "unknown widget hint '" + *hint + "'");
    }
  }
  return p;
}

DeviceSpec parse_device(const json& j, const std::string& path) {
  Fields f(j, path, {"id", "type", "roomId", "position", "properties"});
  DeviceSpec d;
  d.id = f.string("id");
  d.type = f.string("type");
  d.roomId = f.string("roomId");
  d.position = parse_pos(f.require("position"), f.path("position"));
  f.each("properties", false, [&](const json& p, const std::string& pp, std::size_t) {
    d.properties.push_back(parse_property(p, pp));
  });
  return d;
}

ActionSpec parse_action(const json& j, const std::string& path) {
  Fields f(j, path, {"deviceId", "property", "value"});
  return ActionSpec{f.string("deviceId"), f.string("property"), f.literal("value")};
}

RuleSpec parse_rule(const json& j, const std::string& path, std::size_t index) {
  Fields f(j, path, {"id", "kind", "condition", "actions", "blocks", "explanationId", "priority"});
  RuleSpec r;
  r.id = f.string("id");
  std::string kind = f.string("kind");
  if (kind == "action") {
    r.kind = RuleKind::action;
  } else if (kind == "constraint") {
    r.kind = RuleKind::constraint;
  } else {
    throw ParseError(ParseError::Kind::type_mismatch, f.path("kind"),
                     "unknown rule kind '" + kind + "' (expected action or constraint)");
  }
  r.condition = parse_condition_field(f, "condition");
  f.each("actions", false, [&](const json& a, const std::string& ap, std::size_t) {
    r.actions.push_back(parse_action(a, ap));
  });
  f.each("blocks", false, [&](const json& b, const std::string& bp, std::size_t) {
    Fields bf(b, bp, {"deviceId", "property", "blockedValue"});
    BlockSpec block{bf.string("deviceId"), bf.string("property"), std::nullopt};
    if (const json* v = bf.find("blockedValue")) block.blockedValue = Fields::as_literal(*v, bf.path("blockedValue"));
    r.blocks.push_back(std::move(block));
  });
  r.explanationId = f.opt_string("explanationId");
  r.priority = f.opt_integer("priority").value_or(static_cast<std::int64_t>(index));
  return r;
}

TriggerSpec parse_trigger(const json& j, const std::string& path) {
  Fields f(j, path, {"id", "when", "effects", "oneShot", "explanationId"});
  TriggerSpec t;
  t.id = f.string("id");
  const json& when = f.require("when");
  if (!when.is_object()) fail_type(f.path("when"), "object", when);
  if (!when.contains("type")) {
    throw ParseError(ParseError::Kind::missing_field, join(f.path("when"), "type"),
                     "missing required field 'type'");
  }
  std::string type = Fields::as_string(when["type"], join(f.path("when"), "type"));
  if (type == "atTime") {
    Fields w(when, f.path("when"), {"type", "seconds"});
    t.when = AtTime{w.number("seconds")};
  } else if (type == "afterEvent") {
    Fields w(when, f.path("when"), {"type", "eventType", "deviceId", "delaySeconds"});
    t.when = AfterEvent{w.string("eventType"), w.opt_string("deviceId"),
                        w.opt_number("delaySeconds").value_or(0.0)};
  } else {
    throw ParseError(ParseError::Kind::type_mismatch, join(f.path("when"), "type"),
                     "unknown trigger type '" + type + "' (expected atTime or afterEvent)");
  }
  f.each("effects", true, [&](const json& e, const std::string& ep, std::size_t) {
    if (e.is_object() && e.contains("context")) {
      Fields ef(e, ep, {"context", "value"});
      t.effects.emplace_back(EnvironmentSet{ef.string("context"), ef.literal("value")});
    } else {
      t.effects.emplace_back(parse_action(e, ep));
    }
  });
  t.oneShot = f.boolean("oneShot", true);
  t.explanationId = f.opt_string("explanationId");
  return t;
}

TaskSpec parse_task(const json& j, const std::string& path) {
  Fields f(j, path, {"id", "description", "goal", "timeoutSeconds", "dependsOn", "abortable"});
  TaskSpec t;
  t.id = f.string("id");
  t.description = f.opt_string("description").value_or("");
  t.goal = parse_condition_field(f, "goal");
  t.timeoutSeconds = f.opt_number("timeoutSeconds");
  t.dependsOn = f.opt_string("dependsOn");
  t.abortable = f.boolean("abortable", false);
  return t;
}

ExplanationSpec parse_explanation(const json& j, const std::string& path) {
  Fields f(j, path, {"id", "template", "followUps", "external"});
  ExplanationSpec e;
  e.id = f.string("id");
  e.templateText = f.string("template");
  f.each("followUps", false, [&](const json& fu, const std::string& fp, std::size_t) {
    Fields ff(fu, fp, {"keywords", "explanationId"});
    FollowUpSpec follow;
    ff.each("keywords", true, [&](const json& k, const std::string& kp, std::size_t) {
      follow.keywords.push_back(Fields::as_string(k, kp));
    });
    follow.explanationId = ff.string("explanationId");
    e.followUps.push_back(std::move(follow));
  });
  e.external = f.boolean("external", false);
  return e;
}

ExplanationConfig parse_explanation_config(const json& j, const std::string& path) {
  Fields f(j, path, {"defaultDeliveryMode", "engineEndpoint", "engineTimeoutMs", "notifyAvailability"});
  ExplanationConfig c;
  if (auto mode = f.opt_string("defaultDeliveryMode")) {
    auto parsed = delivery_mode_from_string(*mode);
    if (!parsed) {
      throw ParseError(ParseError::Kind::type_mismatch, f.path("defaultDeliveryMode"),
                       "unknown delivery mode '" + *mode + "' (expected push, pull or interactive)");
    }
    c.defaultDeliveryMode = *parsed;
  }
  if (const json* ep = f.find("engineEndpoint")) {
    Fields ef(*ep, f.path("engineEndpoint"), {"url", "transport"});
    EngineEndpoint endpoint;
    endpoint.url = ef.string("url");
    std::string transport = ef.opt_string("transport").value_or("rest");
    if (transport == "rest") {
      endpoint.transport = EngineTransport::rest;
    } else if (transport == "websocket") {
      endpoint.transport = EngineTransport::websocket;
    } else {
      throw ParseError(ParseError::Kind::type_mismatch, ef.path("transport"),
                       "unknown transport '" + transport + "' (expected rest or websocket)");
    }
    c.engineEndpoint = std::move(endpoint);
  }
  c.engineTimeoutMs = f.opt_integer("engineTimeoutMs").value_or(kDefaultEngineTimeoutMs);
  c.notifyAvailability = f.boolean("notifyAvailability", true);
  return c;
}

}  // namespace

ScenarioSpec parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(ParseError::Kind::syntax, "", e.what(), e.byte);
  }
  return parse_scenario_json(doc);
}

ScenarioSpec parse_scenario_json(const json& doc) {
  Fields f(doc, "",
           {"schemaVersion", "id", "name", "rooms", "devices", "rules", "triggers", "tasks",
            "explanations", "contextDefaults", "explanationConfig"});
  auto version = f.integer("schemaVersion");
  if (version != kSchemaVersion) {
    throw ParseError(ParseError::Kind::type_mismatch, "schemaVersion",
                     "unsupported schemaVersion " + std::to_string(version) + " (expected " +
                         std::to_string(kSchemaVersion) + ")");
  }
  ScenarioSpec s;
  s.id = f.string("id");
  s.name = f.opt_string("name").value_or("");
  f.each("rooms", true, [&](const json& j, const std::string& p, std::size_t) {
    s.rooms.push_back(parse_room(j, p));
  });
  f.each("devices", false, [&](const json& j, const std::string& p, std::size_t) {
    s.devices.push_back(parse_device(j, p));
  });
  f.each("rules", false, [&](const json& j, const std::string& p, std::size_t i) {
    s.rules.push_back(parse_rule(j, p, i));
  });
  f.each("triggers", false, [&](const json& j, const std::string& p, std::size_t) {
    s.triggers.push_back(parse_trigger(j, p));
  });
  f.each("tasks", false, [&](const json& j, const std::string& p, std::size_t) {
    s.tasks.push_back(parse_task(j, p));
  });
  f.each("explanations", false, [&](const json& j, const std::string& p, std::size_t) {
    s.explanations.push_back(parse_explanation(j, p));
  });
  if (const json* ctx = f.find("contextDefaults")) {
    if (!ctx->is_object()) fail_type("contextDefaults", "object", *ctx);
    for (auto it = ctx->begin(); it != ctx->end(); ++it) {
      s.contextDefaults[it.key()] = Fields::as_literal(it.value(), "contextDefaults." + it.key());
    }
  }
  if (const json* cfg = f.find("explanationConfig")) {
    s.explanationConfig = parse_explanation_config(*cfg, "explanationConfig");
  }
  return s;
}

namespace {

json pos_json(TilePos p) { return json{{"x", p.x}, {"y", p.y}}; }

json action_json(const ActionSpec& a) {
  return json{{"deviceId", a.deviceId}, {"property", a.property}, {"value", to_json(a.value)}};
}

}  // namespace

json serialize_scenario(const ScenarioSpec& s) {
  json doc;
  doc["schemaVersion"] = kSchemaVersion;
  doc["id"] = s.id;
  doc["name"] = s.name;

  doc["rooms"] = json::array();
  for (const auto& r : s.rooms) {
    json room{{"id", r.id},
              {"bounds",
               {{"x", r.bounds.x}, {"y", r.bounds.y}, {"width", r.bounds.width}, {"height", r.bounds.height}}}};
    room["doors"] = json::array();
    for (const auto& d : r.doors) room["doors"].push_back({{"target", d.target}, {"position", pos_json(d.position)}});
    doc["rooms"].push_back(std::move(room));
  }

  doc["devices"] = json::array();
  for (const auto& d : s.devices) {
    json dev{{"id", d.id}, {"type", d.type}, {"roomId", d.roomId}, {"position", pos_json(d.position)}};
    dev["properties"] = json::array();
    for (const auto& p : d.properties) {
      json prop{{"name", p.name}, {"kind", to_string(p.kind)}};
      if (p.kind == PropertyKind::enumeration) prop["values"] = p.values;
      if (p.kind == PropertyKind::numeric) {
        prop["min"] = p.min;
        prop["max"] = p.max;
        prop["step"] = p.step;
      }
      prop["initial"] = to_json(p.initial);
      prop["userWritable"] = p.userWritable;
      if (p.widgetHint) prop["widgetHint"] = to_string(*p.widgetHint);
      dev["properties"].push_back(std::move(prop));
    }
    doc["devices"].push_back(std::move(dev));
  }

  doc["rules"] = json::array();
  for (const auto& r : s.rules) {
    json rule{{"id", r.id},
              {"kind", r.kind == RuleKind::action ? "action" : "constraint"},
              {"condition", to_string(r.condition)},
              {"priority", r.priority}};
    if (!r.actions.empty()) {
      rule["actions"] = json::array();
      for (const auto& a : r.actions) rule["actions"].push_back(action_json(a));
    }
    if (!r.blocks.empty()) {
      rule["blocks"] = json::array();
      for (const auto& b : r.blocks) {
        json block{{"deviceId", b.deviceId}, {"property", b.property}};
        if (b.blockedValue) block["blockedValue"] = to_json(*b.blockedValue);
        rule["blocks"].push_back(std::move(block));
      }
    }
    if (r.explanationId) rule["explanationId"] = *r.explanationId;
    doc["rules"].push_back(std::move(rule));
  }

  doc["triggers"] = json::array();
  for (const auto& t : s.triggers) {
    json trig{{"id", t.id}, {"oneShot", t.oneShot}};
    if (const auto* a = std::get_if<AtTime>(&t.when)) {
      trig["when"] = {{"type", "atTime"}, {"seconds", a->seconds}};
    } else {
      const auto& e = std::get<AfterEvent>(t.when);
      json w{{"type", "afterEvent"}, {"eventType", e.eventType}, {"delaySeconds", e.delaySeconds}};
      if (e.deviceId) w["deviceId"] = *e.deviceId;
      trig["when"] = std::move(w);
    }
    trig["effects"] = json::array();
    for (const auto& eff : t.effects) {
      if (const auto* a = std::get_if<ActionSpec>(&eff)) {
        trig["effects"].push_back(action_json(*a));
      } else {
        const auto& env = std::get<EnvironmentSet>(eff);
        trig["effects"].push_back({{"context", env.name}, {"value", to_json(env.value)}});
      }
    }
    if (t.explanationId) trig["explanationId"] = *t.explanationId;
    doc["triggers"].push_back(std::move(trig));
  }

  doc["tasks"] = json::array();
  for (const auto& t : s.tasks) {
    json task{{"id", t.id}, {"description", t.description}, {"goal", to_string(t.goal)},
              {"abortable", t.abortable}};
    if (t.timeoutSeconds) task["timeoutSeconds"] = *t.timeoutSeconds;
    if (t.dependsOn) task["dependsOn"] = *t.dependsOn;
    doc["tasks"].push_back(std::move(task));
  }

  doc["explanations"] = json::array();
  for (const auto& e : s.explanations) {
    json ex{{"id", e.id}, {"template", e.templateText}, {"external", e.external}};
    if (!e.followUps.empty()) {
      ex["followUps"] = json::array();
      for (const auto& f : e.followUps) {
        ex["followUps"].push_back({{"keywords", f.keywords}, {"explanationId", f.explanationId}});
      }
    }
    doc["explanations"].push_back(std::move(ex));
  }

  doc["contextDefaults"] = json::object();
  for (const auto& [name, value] : s.contextDefaults) doc["contextDefaults"][name] = to_json(value);

  const auto& c = s.explanationConfig;
  json cfg{{"defaultDeliveryMode", to_string(c.defaultDeliveryMode)},
           {"engineTimeoutMs", c.engineTimeoutMs},
           {"notifyAvailability", c.notifyAvailability}};
  if (c.engineEndpoint) {
    cfg["engineEndpoint"] = {{"url", c.engineEndpoint->url}, {"transport", to_string(c.engineEndpoint->transport)}};
  }
  doc["explanationConfig"] = std::move(cfg);
  return doc;
}

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace shine
