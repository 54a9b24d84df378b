#pragma once

namespace eit {

/* Whole command-line surface. Exit codes: 0 success, 2 usage error,
   3 configuration / validation error, 4 numerical failure. */
int run_cli(int argc, const char* const* argv);

}  // namespace eit
