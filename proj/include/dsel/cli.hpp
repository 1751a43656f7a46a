#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dsel/pipelines.hpp"

namespace dsel {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  // oracle-check tolerance violated
inline constexpr int kExitUsage = 2;        // parse errors and failed preconditions
inline constexpr int kExitNumeric = 3;      // numeric abort or malformed metrics row

// Entry point of the `dsel` tool. Every failure prints one line starting
// with "error: " to `err` and returns a nonzero code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

// Run-directory helpers, shared with tests.
void save_trajectory(const std::filesystem::path& dir, const WeightTrajectory& trajectory);
WeightTrajectory load_trajectory(const std::filesystem::path& dir);

}  // namespace dsel
