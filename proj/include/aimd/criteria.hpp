#pragma once

// Pass/fail thresholds for scaled reproduction of the two canned
// experiments. Shared by `aimd check` and the acceptance suite.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aimd/core.hpp"
#include "aimd/cost.hpp"
#include "aimd/trace.hpp"

namespace aimd::criteria {

inline constexpr double kMeanRelErrorMax = 0.10;
inline constexpr double kPairRelErrorMax = 0.05;
inline constexpr double kPairFractionMin = 0.80;
inline constexpr double kRelErrorFloor = 1e-3;
inline constexpr double kCostRatioMin = 0.98;
inline constexpr double kCostRatioMax = 1.10;
inline constexpr double kCapacityRelErrorMax = 0.03;
inline constexpr double kConsensusCvMax = 0.10;
inline constexpr std::uint64_t kEarlyStep = 1000;
inline constexpr double kBinaryCapacityRelErrorMax = 0.05;
inline constexpr std::uint64_t kBinaryTailWindow = 1000;
inline constexpr double kBinaryConsensusRatioMax = 0.25;

struct Result {
  std::string id;
  std::string name;
  bool pass = false;
  std::string detail;
};

Result divisible_convergence(const Matrix& final_avg, const Matrix& oracle);
Result cost_ratio(const Matrix& final_avg, const Matrix& oracle, std::span<const PolynomialCost> costs);
Result capacity_tracking(std::span<const double> final_avg_totals, const SystemConfig& spec);
/// final_cv/early_cv: per-resource coefficient of variation of grad_j f_i(avg_i).
Result derivative_consensus(std::span<const double> final_cv, const std::optional<std::vector<double>>& early_cv);
Result probability_bound(const ProbabilityStats& lambda);
Result divisible_bits(std::span<const std::uint64_t> bits_per_step, std::size_t m);
Result binary_bits(std::span<const std::uint64_t> bits_per_step, std::size_t m, unsigned mu_bits);
/// tail_mean_totals: mean of sum_i xi_i^j over the final kBinaryTailWindow steps.
Result binary_capacity(const std::optional<std::vector<double>>& tail_mean_totals, const SystemConfig& spec);
Result binary_consensus(double final_std, const std::optional<double>& early_std);
Result sigma_range(const ProbabilityStats& sigma);

bool all_pass(std::span<const Result> results);
std::string format_line(const Result& r);

}  // namespace aimd::criteria
