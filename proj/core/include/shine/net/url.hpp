#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace shine::net {

struct Url {
  std::string scheme;  // http, https, ws, wss
  std::string host;
  std::uint16_t port = 0;
  std::string target;  // path plus query, at least "/"
  bool secure() const { return scheme == "https" || scheme == "wss"; }
};

/// Accepts absolute http/https/ws/wss URLs with a host; the port defaults
/// from the scheme.
std::optional<Url> parse_url(std::string_view text);

}  // namespace shine::net
