#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace segkit::cli {

inline constexpr std::string_view kVersion = "0.3.0";

// Runs the command line `args` (args[0] is the program name). Exit codes:
// 0 success, 1 runtime error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segkit::cli
