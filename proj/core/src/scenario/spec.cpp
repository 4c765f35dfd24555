#include "shine/scenario/spec.hpp"

#include <algorithm>
#include <cmath>

namespace shine {

namespace {

constexpr double kGridTolerance = 1e-9;

bool on_grid(double offset, double step) {
  double q = offset / step;
  return std::fabs(q - std::round(q)) <= kGridTolerance * std::max(1.0, std::fabs(q));
}

}  // namespace

std::string_view to_string(PropertyKind kind) {
  switch (kind) {
    case PropertyKind::boolean: return "boolean";
    case PropertyKind::enumeration: return "enumeration";
    case PropertyKind::numeric: return "numeric";
  }
  return "?";
}

std::string_view to_string(WidgetHint hint) {
  switch (hint) {
    case WidgetHint::toggle: return "toggle";
    case WidgetHint::dropdown: return "dropdown";
    case WidgetHint::radio: return "radio";
    case WidgetHint::slider: return "slider";
    case WidgetHint::stepper: return "stepper";
  }
  return "?";
}

std::optional<WidgetHint> widget_hint_from_string(std::string_view s) {
  for (auto h : {WidgetHint::toggle, WidgetHint::dropdown, WidgetHint::radio, WidgetHint::slider,
                 WidgetHint::stepper}) {
    if (to_string(h) == s) return h;
  }
  return std::nullopt;
}

std::string_view to_string(DeliveryMode mode) {
  switch (mode) {
    case DeliveryMode::push: return "push";
    case DeliveryMode::pull: return "pull";
    case DeliveryMode::interactive: return "interactive";
  }
  return "?";
}

std::optional<DeliveryMode> delivery_mode_from_string(std::string_view s) {
  if (s == "push") return DeliveryMode::push;
  if (s == "pull") return DeliveryMode::pull;
  if (s == "interactive") return DeliveryMode::interactive;
  return std::nullopt;
}

std::string_view to_string(EngineTransport t) {
  return t == EngineTransport::rest ? "rest" : "websocket";
}

LiteralKind PropertySpec::literal_kind() const {
  switch (kind) {
    case PropertyKind::boolean: return LiteralKind::boolean;
    case PropertyKind::enumeration: return LiteralKind::string;
    case PropertyKind::numeric: return LiteralKind::number;
  }
  return LiteralKind::boolean;
}

bool PropertySpec::accepts(const Literal& v) const {
  if (kind_of(v) != literal_kind()) return false;
  switch (kind) {
    case PropertyKind::boolean:
      return true;
    case PropertyKind::enumeration:
      return std::find(values.begin(), values.end(), std::get<std::string>(v)) != values.end();
    case PropertyKind::numeric: {
      double d = std::get<double>(v);
      if (!(step > 0) || d < min || d > max) return false;
      return on_grid(d - min, step);
    }
  }
  return false;
}

bool PropertySpec::renders_on_off() const {
  return kind == PropertyKind::boolean && widgetHint == WidgetHint::toggle;
}

const PropertySpec* DeviceSpec::find_property(std::string_view n) const {
  for (const auto& p : properties) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

const DeviceSpec* ScenarioSpec::find_device(std::string_view device_id) const {
  for (const auto& d : devices) {
    if (d.id == device_id) return &d;
  }
  return nullptr;
}

const ExplanationSpec* ScenarioSpec::find_explanation(std::string_view explanation_id) const {
  for (const auto& e : explanations) {
    if (e.id == explanation_id) return &e;
  }
  return nullptr;
}

}  // namespace shine
