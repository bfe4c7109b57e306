#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace symsplit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // certification failure, or an integration that stopped early
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNoSolution = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ordered `key = value` pairs. Keys are long option names without dashes.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Reads `key = value` lines; blank lines and '#' comments are skipped.
ConfigEntries parse_config(std::istream& in);
ConfigEntries read_config_file(const std::string& path);
std::string format_config(const ConfigEntries& entries);

/// Runs one subcommand; `args` excludes the program name. Reports go to
/// `out` unless an output path is given, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace symsplit
