#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shine {

/// One `{{device.<id>.<prop>}}` or `{{context.<name>}}` occurrence.
struct Placeholder {
  enum class Kind { device, context };
  Kind kind = Kind::context;
  std::size_t offset = 0;  // of the opening braces
  std::size_t length = 0;  // including both brace pairs
  std::string first;       // device id or context name
  std::string second;      // property (device only)
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Placeholders in order of appearance. Throws TemplateError for an unclosed
/// `{{` or a reference that is neither form above.
std::vector<Placeholder> scan_placeholders(std::string_view text);

bool is_identifier(std::string_view s);

}  // namespace shine
