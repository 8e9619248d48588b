#pragma once

#include <string>
#include <vector>

namespace canopy::cli {

/// Runs one CLI invocation (argv without the program name).
/// Exit codes: 0 success, 1 runtime failure, 2 usage error,
/// 3 missing tile-service API key.
int run(const std::vector<std::string>& args);

}  // namespace canopy::cli
