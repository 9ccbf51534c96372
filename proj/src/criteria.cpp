#include "aimd/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aimd/metrics.hpp"

namespace aimd::criteria {

namespace {

std::ostringstream stream() {
  std::ostringstream os;
  os.precision(6);
  return os;
}

}  // namespace

Result divisible_convergence(const Matrix& final_avg, const Matrix& oracle) {
  Result r{"C1", "divisible convergence", false, {}};
  if (final_avg.size() == 0 || final_avg.rows() != oracle.rows() || final_avg.cols() != oracle.cols()) {
    r.detail = "insufficient data (missing or mismatched averages/oracle)";
    return r;
  }
  const Matrix rel = relative_error(final_avg, oracle, kRelErrorFloor);
  const double mean = rel.mean();
  const double frac = (rel.array() < kPairRelErrorMax).cast<double>().mean();
  r.pass = mean < kMeanRelErrorMax && frac >= kPairFractionMin;
  auto os = stream();
  os << "mean rel error " << mean << " (< " << kMeanRelErrorMax << "), pairs < " << kPairRelErrorMax << ": "
     << frac * 100.0 << "% (>= " << kPairFractionMin * 100.0 << "%)";
  r.detail = os.str();
  return r;
}

Result cost_ratio(const Matrix& final_avg, const Matrix& oracle, std::span<const PolynomialCost> costs) {
  Result r{"C2", "cost ratio", false, {}};
  if (final_avg.size() == 0 || final_avg.rows() != oracle.rows()) {
    r.detail = "insufficient data";
    return r;
  }
  const double ratio = aimd::cost_ratio(final_avg, oracle, costs);
  r.pass = ratio >= kCostRatioMin && ratio <= kCostRatioMax;
  auto os = stream();
  os << "sum f(avg) / sum f(x*) = " << ratio << " (in [" << kCostRatioMin << ", " << kCostRatioMax << "])";
  r.detail = os.str();
  return r;
}

Result capacity_tracking(std::span<const double> final_avg_totals, const SystemConfig& spec) {
  Result r{"C3", "capacity tracking", false, {}};
  if (final_avg_totals.size() != spec.m) {
    r.detail = "insufficient data";
    return r;
  }
  const auto err = aimd::capacity_tracking(final_avg_totals, spec);
  r.pass = std::all_of(err.begin(), err.end(), [](double e) { return e < kCapacityRelErrorMax; });
  auto os = stream();
  for (std::size_t j = 0; j < err.size(); ++j) os << (j ? ", " : "") << "r" << j << " rel error " << err[j];
  os << " (< " << kCapacityRelErrorMax << ")";
  r.detail = os.str();
  return r;
}

Result derivative_consensus(std::span<const double> final_cv, const std::optional<std::vector<double>>& early_cv) {
  Result r{"C4", "derivative consensus", false, {}};
  if (final_cv.empty() || !early_cv || early_cv->size() != final_cv.size()) {
    r.detail = "insufficient data (no snapshot at step " + std::to_string(kEarlyStep) + ")";
    return r;
  }
  bool ok = true;
  auto os = stream();
  for (std::size_t j = 0; j < final_cv.size(); ++j) {
    ok = ok && final_cv[j] < kConsensusCvMax && final_cv[j] < (*early_cv)[j];
    os << (j ? ", " : "") << "r" << j << " cv " << final_cv[j] << " (step " << kEarlyStep << ": " << (*early_cv)[j]
       << ")";
  }
  os << " (< " << kConsensusCvMax << " and shrinking)";
  r.pass = ok;
  r.detail = os.str();
  return r;
}

Result probability_bound(const ProbabilityStats& lambda) {
  Result r{"C5", "probability bound", false, {}};
  r.pass = lambda.evaluations > 0 && lambda.min > 0.0 && lambda.max < 1.0;
  auto os = stream();
  os << lambda.evaluations << " lambda evaluations in [" << lambda.min << ", " << lambda.max << "]";
  if (lambda.evaluations == 0) os << " (none evaluated)";
  r.detail = os.str();
  return r;
}

Result divisible_bits(std::span<const std::uint64_t> bits_per_step, std::size_t m) {
  Result r{"C6", "communication overhead", false, {}};
  const std::uint64_t worst = bits_per_step.empty() ? 0 : *std::max_element(bits_per_step.begin(), bits_per_step.end());
  r.pass = !bits_per_step.empty() && worst <= m;
  auto os = stream();
  os << "max " << worst << " bits/step over " << bits_per_step.size() << " steps (<= " << m << ")";
  r.detail = os.str();
  return r;
}

Result binary_bits(std::span<const std::uint64_t> bits_per_step, std::size_t m, unsigned mu_bits) {
  Result r{"C6", "communication overhead", false, {}};
  const std::uint64_t expect = static_cast<std::uint64_t>(mu_bits) * m;
  const auto bad = std::count_if(bits_per_step.begin(), bits_per_step.end(), [&](auto b) { return b != expect; });
  r.pass = !bits_per_step.empty() && bad == 0;
  auto os = stream();
  os << bits_per_step.size() - static_cast<std::size_t>(bad) << "/" << bits_per_step.size() << " steps broadcast exactly "
     << expect << " bits";
  r.detail = os.str();
  return r;
}

Result binary_capacity(const std::optional<std::vector<double>>& tail_mean_totals, const SystemConfig& spec) {
  Result r{"C7", "binary capacity tracking", false, {}};
  if (!tail_mean_totals || tail_mean_totals->size() != spec.m) {
    r.detail = "insufficient data (need " + std::to_string(kBinaryTailWindow) + " steps)";
    return r;
  }
  bool ok = true;
  auto os = stream();
  for (std::size_t j = 0; j < spec.m; ++j) {
    const double c = spec.resources[j].capacity;
    const double err = std::abs((*tail_mean_totals)[j] - c) / c;
    ok = ok && err < kBinaryCapacityRelErrorMax;
    os << (j ? ", " : "") << "r" << j << " tail mean " << (*tail_mean_totals)[j] << " vs C " << c;
  }
  os << " (within " << kBinaryCapacityRelErrorMax * 100.0 << "%)";
  r.pass = ok;
  r.detail = os.str();
  return r;
}

Result binary_consensus(double final_std, const std::optional<double>& early_std) {
  Result r{"C8", "binary consensus", false, {}};
  if (!early_std || !(*early_std > 0.0)) {
    r.detail = "insufficient data (no snapshot at step " + std::to_string(kEarlyStep) + ")";
    return r;
  }
  const double ratio = final_std / *early_std;
  r.pass = ratio < kBinaryConsensusRatioMax;
  auto os = stream();
  os << "std grad_1 g final " << final_std << " / step " << kEarlyStep << " " << *early_std << " = " << ratio << " (< "
     << kBinaryConsensusRatioMax << ")";
  r.detail = os.str();
  return r;
}

Result sigma_range(const ProbabilityStats& sigma) {
  Result r{"C11", "sigma range", false, {}};
  r.pass = sigma.evaluations > 0 && sigma.min >= 0.0 && sigma.max <= 1.0;
  auto os = stream();
  os << sigma.evaluations << " sigma evaluations in [" << sigma.min << ", " << sigma.max << "], " << sigma.clamped
     << " clamped";
  r.detail = os.str();
  return r;
}

bool all_pass(std::span<const Result> results) {
  return std::all_of(results.begin(), results.end(), [](const Result& r) { return r.pass; });
}

std::string format_line(const Result& r) {
  return std::string(r.pass ? "[PASS] " : "[FAIL] ") + r.id + " " + r.name + ": " + r.detail;
}

}  // namespace aimd::criteria
