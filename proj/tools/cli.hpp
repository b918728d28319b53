#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcs::cli {

inline constexpr int kExitCsv = 2;
inline constexpr int kExitConfig = 3;

/// Entry point shared by the `mcs` binary and the tests. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcs::cli
