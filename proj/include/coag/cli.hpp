#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coag {

/// Exit codes of the command-line frontend.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // compare found a discrepancy beyond tolerance
  kExitValidation = 2,
  kExitCriticality = 3,
  kExitHypothesis = 4,
  kExitNumerical = 5,
};

/// Runs one CLI invocation; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coag
