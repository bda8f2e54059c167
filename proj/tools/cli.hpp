#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ehcs::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalid = 1;   // bad flags, malformed or invalid config, I/O
inline constexpr int kMarginal = 2;  // a certification landed in the marginal band

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ehcs::cli
