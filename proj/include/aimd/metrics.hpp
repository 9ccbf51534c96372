#pragma once

// Trace capture and figure-level diagnostics: convergence error against an
// oracle, cross-agent derivative spread, cost ratio, capacity tracking,
// broadcast-bit accounting and replay checks.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aimd/core.hpp"
#include "aimd/cost.hpp"
#include "aimd/solver.hpp"
#include "aimd/trace.hpp"

namespace aimd {

/// Light per-step row kept for every step of a run.
struct StepSummary {
  std::uint64_t step = 0;
  std::vector<double> totals;
  std::vector<double> avg_totals;
  std::uint64_t bits_broadcast = 0;
  ControlSignal signal;
  std::vector<double> expected_totals;
};

struct RecorderOptions {
  std::uint64_t stride = 100;
  std::uint64_t window = 50;   // dense final window
  std::uint64_t horizon = 0;   // needed to place the final window
  std::vector<std::uint64_t> extra_steps;
};

/// Keeps a StepSummary for every step and full matrices for strided steps,
/// the final dense window, and any extra steps.
class TraceRecorder final : public TraceSink {
 public:
  explicit TraceRecorder(RecorderOptions options);

  void begin(const TraceRecord& initial) override;
  bool wants_matrices(std::uint64_t step) const override;
  void record(const TraceRecord& rec) override;

  const TraceRecord& initial() const { return initial_; }
  const std::vector<StepSummary>& series() const { return series_; }
  const std::vector<TraceRecord>& snapshots() const { return snapshots_; }
  /// Snapshot at exactly `step`, or nullptr.
  const TraceRecord* snapshot_at(std::uint64_t step) const;
  const TraceRecord* last_snapshot() const;
  const RecorderOptions& options() const { return options_; }

 private:
  RecorderOptions options_;
  TraceRecord initial_;
  std::vector<StepSummary> series_;
  std::vector<TraceRecord> snapshots_;
};

/// |avg - x*| elementwise.
Matrix convergence_error(const Matrix& avg, const Matrix& oracle);

/// |avg - x*| / max(x*, floor) elementwise.
Matrix relative_error(const Matrix& avg, const Matrix& oracle, double floor = 1e-3);

struct Spread {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  double cv() const { return mean != 0.0 ? stddev / std::abs(mean) : 0.0; }
};

/// Per resource: mean and standard deviation over agents of grad_j f_i(avg_i).
std::vector<Spread> gradient_spread(const Matrix& avg, std::span<const PolynomialCost> costs);
std::vector<Spread> gradient_spread(const TraceRecord& rec, std::span<const PolynomialCost> costs);

/// sum_i f_i(avg_i) / sum_i f_i(x*_i). Throws NumericError if the
/// denominator is not positive.
double cost_ratio(const Matrix& avg, const Matrix& oracle, std::span<const PolynomialCost> costs);

/// |sum_i avg_i^j - C^j| / C^j per resource.
std::vector<double> capacity_tracking(std::span<const double> avg_totals, const SystemConfig& spec);

struct ReplayReport {
  std::uint64_t checked = 0;
  std::uint64_t mismatches = 0;
  double max_error = 0.0;
  std::string first_mismatch;
  bool ok() const { return mismatches == 0; }
};

/// Totals/avg_totals of every snapshot equal the column sums of its matrices.
ReplayReport verify_snapshot_totals(const TraceRecorder& trace);
/// Divisible: every step's bits recompute from the previous step's totals,
/// and bits_broadcast equals their count (<= m).
ReplayReport verify_divisible_signals(const TraceRecorder& trace, const SystemConfig& spec);
/// Binary: bits_broadcast == mu * m on every step.
ReplayReport verify_binary_bits(const TraceRecorder& trace, std::size_t m, unsigned mu_bits);
/// Binary: Omega(K) - Omega(0) == -tau * sum_k (total(k) - headroom * C),
/// reported as relative error per resource (only meaningful while the floor
/// never engaged).
ReplayReport verify_omega_telescoping(const TraceRecorder& trace, const SystemConfig& spec,
                                      std::span<const double> tau, std::span<const double> omega0,
                                      double rel_tol = 1e-6);

/// Every recorded value is finite.
ReplayReport verify_finite(const TraceRecorder& trace);

// --- CSV -------------------------------------------------------------------

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// RFC-4180 field quoting (only when needed), LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

}  // namespace aimd
