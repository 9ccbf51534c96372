#pragma once

// Optimality oracle for the allocation programs
//   min sum_i f_i(x_i)  s.t.  sum_i x_i^j = C^j,  0 <= x_i^j (<= cap)
// solved by projected gradient descent over a product of (capped) simplices.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aimd/core.hpp"
#include "aimd/cost.hpp"

namespace aimd {

struct ConvexProgram {
  std::vector<PolynomialCost> costs;
  std::vector<double> capacities;
  std::optional<double> box_upper;  // 1 for unit-demand programs

  std::size_t agents() const { return costs.size(); }
  std::size_t resources() const { return capacities.size(); }
  void validate() const;
};

struct SolverResult {
  Matrix solution;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::uint64_t iterations = 0;
  bool converged = false;
};

inline constexpr double kInteriorEps = 1e-8;

/// argmin ||w - v||^2 s.t. sum w = total, 0 <= w (<= cap). Throws
/// InfeasibleError when n * cap < total.
std::vector<double> project_capped_simplex(std::span<const double> v, double total,
                                           std::optional<double> cap = std::nullopt);

/// Per resource: spread (max - min) of grad_j f_i over agents strictly inside
/// their bounds.
std::vector<double> kkt_consensus_residual(const Matrix& solution, std::span<const PolynomialCost> costs,
                                           std::optional<double> cap = std::nullopt);

/// Scalar optimality measure used as the stopping test: consensus spread,
/// plus bound-multiplier sign violations of boundary agents, plus
/// feasibility violation.
double kkt_residual(const ConvexProgram& program, const Matrix& solution);

double objective(std::span<const PolynomialCost> costs, const Matrix& x);

SolverResult solve(const ConvexProgram& program, double tol = 1e-10, std::uint64_t max_iters = 200000);

}  // namespace aimd
