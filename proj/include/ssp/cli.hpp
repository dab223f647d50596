#pragma once

#include <iosfwd>

namespace ssp::cli {

/// Runs one command line. Returns 0 on success, 2 on a usage error, 1 on a runtime error.
/// Diagnostics go to `err`; reports and tables go to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ssp::cli
