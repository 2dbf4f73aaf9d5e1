#pragma once

#include <iosfwd>

namespace catsafe::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes: 0 success, 1 internal error, 2 input validation error.
int run(int argc, const char* const* argv);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace catsafe::cli
