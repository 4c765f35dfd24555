#include "shine/net/url.hpp"

#include <charconv>
#include <cctype>

namespace shine::net {

std::optional<Url> parse_url(std::string_view text) {
  auto sep = text.find("://");
  if (sep == std::string_view::npos) return std::nullopt;
  Url url;
  url.scheme = std::string(text.substr(0, sep));
  std::uint16_t default_port = 0;
  if (url.scheme == "http" || url.scheme == "ws") {
    default_port = 80;
  } else if (url.scheme == "https" || url.scheme == "wss") {
    default_port = 443;
  } else {
    return std::nullopt;
  }

  std::string_view rest = text.substr(sep + 3);
  auto slash = rest.find_first_of("/?");
  std::string_view authority = rest.substr(0, slash);
  url.target = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (url.target.front() == '?') url.target.insert(url.target.begin(), '/');

  auto colon = authority.rfind(':');
  std::string_view host = authority;
  url.port = default_port;
  if (colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    auto port_text = authority.substr(colon + 1);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value == 0 || value > 65535) {
      return std::nullopt;
    }
    url.port = static_cast<std::uint16_t>(value);
  }
  if (host.empty()) return std::nullopt;
  for (char c : host) {
    auto u = static_cast<unsigned char>(c);
    if (!std::isalnum(u) && c != '.' && c != '-' && c != '_') return std::nullopt;
  }
  url.host = std::string(host);
  for (char c : url.target) {
    if (std::isspace(static_cast<unsigned char>(c))) return std::nullopt;
  }
  return url;
}

}  // namespace shine::net
