#pragma once

#include <cstdint>
#include <vector>

#include "aimd/core.hpp"

namespace aimd {

/// Per-step output of either engine. `alloc`/`avg` are filled only when the
/// sink asked for the full matrices at this step; the remaining fields are
/// always populated.
struct TraceRecord {
  std::uint64_t step = 0;
  Matrix alloc;
  Matrix avg;
  ControlSignal signal;  // the broadcast the agents acted on to reach this step
  std::vector<double> totals;
  std::vector<double> avg_totals;
  std::uint64_t bits_broadcast = 0;
  std::vector<double> expected_totals;  // binary only: sum_i sigma_i^j that produced `totals`

  bool has_matrices() const { return alloc.size() != 0; }
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  /// Called once with the step-0 state (matrices always filled).
  virtual void begin(const TraceRecord& initial) { (void)initial; }
  virtual bool wants_matrices(std::uint64_t step) const {
    (void)step;
    return true;
  }
  virtual void record(const TraceRecord& rec) = 0;
};

/// Discards everything; for callers that only need the final state.
class NullSink final : public TraceSink {
 public:
  bool wants_matrices(std::uint64_t) const override { return false; }
  void record(const TraceRecord&) override {}
};

/// Running min/max/count over every probability an engine evaluated.
struct ProbabilityStats {
  std::uint64_t evaluations = 0;
  double min = 1.0;
  double max = 0.0;
  std::uint64_t clamped = 0;   // binary: sigma ratio exceeded 1
  std::uint64_t reseeded = 0;  // binary: degenerate origin, floor probability used

  void observe(double p) {
    ++evaluations;
    if (p < min) min = p;
    if (p > max) max = p;
  }
};

}  // namespace aimd
