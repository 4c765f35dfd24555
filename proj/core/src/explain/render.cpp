#include "shine/explain/render.hpp"

#include "shine/scenario/template.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace shine::explain {

std::string render_template(const ExplanationSpec& spec, const sim::StateSnapshot& state,
                            const ScenarioSpec& scenario) {
  const std::string& text = spec.templateText;
  std::vector<Placeholder> holes;
  try {
    holes = scan_placeholders(text);
  } catch (const TemplateError&) {
    return text;
  }
  std::string out;
  std::size_t pos = 0;
  for (const auto& h : holes) {
    out.append(text, pos, h.offset - pos);
    pos = h.offset + h.length;
    const Literal* value = nullptr;
    bool on_off = false;
    if (h.kind == Placeholder::Kind::context) {
      auto it = state.context.find(h.first);
      if (it != state.context.end()) value = &it->second;
    } else {
      auto dev = state.devices.find(h.first);
      if (dev != state.devices.end()) {
        auto prop = dev->second.find(h.second);
        if (prop != dev->second.end()) value = &prop->second;
      }
      if (const DeviceSpec* d = scenario.find_device(h.first)) {
        if (const PropertySpec* p = d->find_property(h.second)) on_off = p->renders_on_off();
      }
    }
    if (value) {
      out += format_literal(*value, on_off);
    } else {
      out.append(text, h.offset, h.length);
    }
  }
  out.append(text, pos);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::optional<std::size_t> match_follow_up(const ExplanationSpec& parent, std::string_view query,
                                           const std::vector<std::string>& exclude) {
  auto words = tokenize(query);
  std::set<std::string> q(words.begin(), words.end());
  std::optional<std::size_t> best;
  std::size_t best_score = 0;
  for (std::size_t i = 0; i < parent.followUps.size(); ++i) {
    const auto& f = parent.followUps[i];
    if (std::find(exclude.begin(), exclude.end(), f.explanationId) != exclude.end()) continue;
    std::set<std::string> keys;
    for (const auto& k : f.keywords) {
      for (auto& w : tokenize(k)) keys.insert(std::move(w));
    }
    std::size_t score = 0;
    for (const auto& k : keys) score += q.count(k);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace shine::explain
