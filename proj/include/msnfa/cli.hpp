#pragma once

namespace msnfa {

// Command-line entry point.  Exit codes: 0 success, 1 usage error, 2 data or
// model-file error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace msnfa
