#pragma once

#include <string>
#include <vector>

namespace qrepair::cli {

// Exit codes: 0 success, 1 runtime IO failure, 2 configuration/input error.
constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;

// Dispatches one invocation (args excludes argv[0]). Commands: run, report,
// ablate, validate-config.
int run_cli(const std::vector<std::string>& args);

}  // namespace qrepair::cli
