#pragma once

namespace dcfd::cli {

// Runs one CLI invocation (argv[0] is the program name). Never throws:
// errors print as a single line on stderr and map to the documented exit
// codes — 0 ok, 2 config error, 3 data error, 4 numeric failure,
// 1 unexpected.
int run(int argc, const char* const* argv);

}  // namespace dcfd::cli
