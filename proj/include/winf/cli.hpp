#pragma once

#include <iosfwd>

namespace winf {

// Parses argv and runs one subcommand. JSON and CSV go to `out`, logs and
// errors to `err`. Returns 0 on success, 1 on a library error (reported as
// "winf-error: <kind>: <message>") and 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace winf
