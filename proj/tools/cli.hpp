#pragma once

#include <iosfwd>

namespace lfd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one subcommand. Exit 0 on success, 1 on usage errors, 2 on data or
/// model errors.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lfd::cli
