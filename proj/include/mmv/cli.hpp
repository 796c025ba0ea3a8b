#pragma once

#include <string>
#include <vector>

namespace mmv {

/// Command-line entry point; returns the process exit code.
/// Exit contract: 0 success, 1 verification failure, 2 config/usage error,
/// 3 domain error (error class name printed on stderr).
int cli_main(const std::vector<std::string>& args);

}  // namespace mmv
