#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace etd {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs one `etd` invocation; `args` excludes the program name.
// Returns 0 on success, 1 on runtime failure, 2 on usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace etd
