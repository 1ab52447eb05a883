#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stubborn/policy.hpp"

namespace stubborn {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitRuntime = 2,
  kExitMismatch = 3,
};

/// Parses "left", "right", "uniform", "greedy", "stubborn:K:MARGIN" or
/// "ckpt:PATH". Throws ConfigError on anything else.
PolicySpec parse_policy(const std::string& text);

/// Entry point for `stubborn <train|probe|eval|analyze> ...`. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stubborn
