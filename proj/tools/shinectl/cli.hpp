#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shinectl {

/// Runs one shinectl command line. Exit codes: 0 success, 1 validation or
/// assertion failure, 2 usage, I/O or parse errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shinectl
