#pragma once

#include <iosfwd>
#include <string>

namespace nefqvf {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitCap = 3,
  kExitNumeric = 4,
};

// Parses arguments, runs one subcommand and writes CSV to `out` (or to
// --output). Diagnostics go to `err`. Returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Shortest decimal that reads back to the same double.
std::string format_double(double v);

const char* git_revision();

}  // namespace nefqvf
