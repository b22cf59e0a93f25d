#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rvg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one `rvg` command. `args` excludes the program name. Data goes to `out`
/// or to files named by flags; diagnostics go to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rvg
