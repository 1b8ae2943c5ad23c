#pragma once

#include <string>
#include <vector>

namespace esnssm::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one subcommand. Returns 0 on success, 1 on a domain error, 2 on a
/// usage, I/O or schema error.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace esnssm::cli
