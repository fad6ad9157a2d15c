#pragma once

// The evsite command line. run() is the whole program minus process exit,
// so tests can drive it with string arguments.

#include <ostream>
#include <string>
#include <vector>

namespace evsite::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;        // bad flags or unreadable data
inline constexpr int kInfeasible = 2;   // infeasible model, audit violations, unmet calibration
inline constexpr int kDisagree = 3;     // --solver both found different optima

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evsite::cli
