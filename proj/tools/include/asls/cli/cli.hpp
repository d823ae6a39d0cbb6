#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace asls::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the asls executable: run, gen-data, verify, sweep.
int main(int argc, const char* const* argv);

/// Convenience for tests: argv[0] is supplied.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// count log-spaced values from lo to hi inclusive, parsed from "LO:HI:COUNT".
[[nodiscard]] std::vector<double> parse_grid(const std::string& spec);

}  // namespace asls::cli
