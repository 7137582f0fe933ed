#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dqm::cli {

enum ExitCode : int {
  kOk = 0,
  kOtherError = 1,
  kConfigError = 2,
  kSolverFailure = 3,
  kAuditFailure = 4,
};

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace dqm::cli
