#pragma once

#include <ostream>

namespace rigidity::cli {

// Runs the `rigidity` command line. Reports go to --out or `out`, diagnostics
// to `err`. Returns 0 on success, 1 when a checked property fails (the report
// is still written) and 2 on usage or input errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace rigidity::cli
