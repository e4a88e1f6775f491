#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stgnav {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one `stgnav` command line. `args` excludes the program name. Input
/// files given as "-" (the default) are read from `in`; outputs default to
/// `out`.
int cli_dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace stgnav
