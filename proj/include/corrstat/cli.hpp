#pragma once

// Command-line front end. `run` is what tools/corrstat calls; tests drive it directly.

#include <iosfwd>
#include <string>
#include <vector>

namespace corrstat::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: 0 success, 1 runtime error, 2 invalid command line or configuration.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace corrstat::cli
