#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace streamint {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

/// Runs one subcommand. `args` excludes the program name. Results go to files
/// under --out; the main JSON result is also written to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace streamint
