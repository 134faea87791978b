#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rpl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitSuspicious = 2;

// Runs one command line. args[0] is the program name. JSON goes to `out`,
// diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rpl
