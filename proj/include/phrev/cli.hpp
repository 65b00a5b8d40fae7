#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace phrev::cli {

enum ExitCode : int {
  kExitFeasible = 0,
  kExitInfeasible = 1,
  kExitUndecided = 2,
  kExitNotFound = 3,
  kExitUsage = 10,
  kExitIo = 11,
};

struct RunConfig {
  std::string command;  // harp, separability, collective, class-number, gen
  std::filesystem::path input;
  std::filesystem::path output;  // empty: standard output
  std::vector<std::size_t> y_cols;  // 1-based
  std::size_t k = 2;
  std::size_t k_max = 0;  // 0: number of goods
  double harp_tol = 1e-9;
  double tol_accept = 1e-6;
  double tol_reject = 1e-4;
  double eps = 1e-8;
  std::size_t max_iter = 200000;
  std::uint64_t seed = 0;
  bool wall_clock = false;

  // gen
  std::string kind = "cobb-douglas";  // cobb-douglas, nested, collective
  std::size_t periods = 10;
  std::size_t goods = 2;
  std::size_t consumers = 2;
  double noise = 0.0;
  std::filesystem::path witness_output;
};

/// Runs one command and writes its JSON report. Returns the exit code.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses arguments (CLI11) and runs. Usage problems print a synopsis to
/// `err` and return kExitUsage.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace phrev::cli
