#include "shine/scenario/template.hpp"

#include <cctype>

namespace shine {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto c0 = static_cast<unsigned char>(s.front());
  if (!std::isalpha(c0) && c0 != '_') return false;
  for (char c : s.substr(1)) {
    auto u = static_cast<unsigned char>(c);
    if (!std::isalnum(u) && u != '_' && u != '-') return false;
  }
  return true;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<Placeholder> scan_placeholders(std::string_view text) {
  std::vector<Placeholder> out;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    auto close = text.find("}}", pos + 2);
    if (close == std::string_view::npos) {
      throw TemplateError("unclosed placeholder at offset " + std::to_string(pos));
    }
    std::string_view body = trim(text.substr(pos + 2, close - pos - 2));
    Placeholder ph;
    ph.offset = pos;
    ph.length = close + 2 - pos;

    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
      auto dot = body.find('.', start);
      parts.push_back(body.substr(start, dot == std::string_view::npos ? dot : dot - start));
      if (dot == std::string_view::npos) break;
      start = dot + 1;
    }
    if (parts.size() == 3 && parts[0] == "device" && is_identifier(parts[1]) && is_identifier(parts[2])) {
      ph.kind = Placeholder::Kind::device;
      ph.first = parts[1];
      ph.second = parts[2];
    } else if (parts.size() == 2 && parts[0] == "context" && is_identifier(parts[1])) {
      ph.kind = Placeholder::Kind::context;
      ph.first = parts[1];
    } else {
      throw TemplateError("malformed placeholder '{{" + std::string(body) +
                          "}}' (expected device.<id>.<property> or context.<name>)");
    }
    out.push_back(std::move(ph));
    pos = close + 2;
  }
  return out;
}

}  // namespace shine
