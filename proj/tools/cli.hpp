#pragma once

// Subcommand implementations for the `aimd` tool. Kept out of main() so the
// test suites can drive them directly.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aimd/binary.hpp"
#include "aimd/criteria.hpp"
#include "aimd/divisible.hpp"
#include "aimd/harness.hpp"
#include "aimd/metrics.hpp"

namespace aimd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kOutputRootEnv = "AIMD_OUTPUT_ROOT";

struct RunManifest {
  std::string experiment;   // canned name, or
  std::string config_path;  // a config file
  std::filesystem::path out_dir;  // empty: $AIMD_OUTPUT_ROOT (or ./runs) / <name>-seed<seed>
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> horizon;
  std::uint64_t stride = 100;
  std::uint64_t window = 50;
  bool parallel = false;

  void validate() const;
};

/// Experiment after manifest overrides; seed defaults to the first listed seed.
ExperimentDef resolve_experiment(const RunManifest& manifest);
std::filesystem::path resolve_out_dir(const RunManifest& manifest, const ExperimentDef& def);

/// Everything a finished run leaves behind in memory.
struct RunResult {
  ExperimentDef def;
  std::vector<PolynomialCost> costs;
  TraceRecorder trace;
  ProbabilityStats probability;  // lambda (divisible) or sigma (binary)
  std::uint64_t omega_floor_hits = 0;
  std::vector<double> final_omega;
  std::vector<double> tau;    // binary
  std::vector<double> omega0; // binary
};

RunResult execute(const ExperimentDef& def, std::uint64_t stride, std::uint64_t window, bool parallel);

/// Writes experiment.json, averages.csv, allocations.csv, gradient_spread.csv,
/// series.csv and summary.csv. `oracle` (optional) feeds the summary's
/// convergence error and cost ratio.
void write_run(const RunResult& run, const std::filesystem::path& dir, const SolverResult* oracle);

/// key,value rows of the summary file.
std::vector<std::pair<std::string, std::string>> summarize(const RunResult& run, const SolverResult* oracle);

/// oracle.csv (agent, x_r0..) and kkt.csv (key,value).
void write_oracle(const SolverResult& result, const ExperimentDef& def, const std::filesystem::path& dir);
Matrix read_oracle(const std::filesystem::path& oracle_csv, std::size_t n, std::size_t m);

/// Criteria applicable to an on-disk run.
std::vector<criteria::Result> evaluate_run_dir(const std::filesystem::path& run_dir,
                                               const std::optional<std::filesystem::path>& oracle_csv);

int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err);

struct OracleArgs {
  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;  // empty: current directory
  double tol = 0.0;               // 0: experiment's oracle_tol
  std::uint64_t max_iters = 200000;
};
int cmd_oracle(const OracleArgs& args, std::ostream& out, std::ostream& err);

struct CheckArgs {
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> oracle;
};
int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err);

/// Full command line entry point (CLI11 parsing).
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace aimd::cli
