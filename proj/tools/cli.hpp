#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace crystclr::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalError = 3,
};

/// Entry point behind the crystclr binary. argv[0] is the program name.
int run(std::span<const std::string> argv, std::ostream& out, std::ostream& err);

}  // namespace crystclr::cli
