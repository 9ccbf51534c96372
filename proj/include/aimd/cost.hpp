#pragma once

// Polynomial agent costs with analytic gradient/Hessian, the F_delta
// membership check on a compact box, and derivation of the per-resource
// normalization (divisible) and gain (unit-demand) constants.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aimd {

using Vector = std::vector<double>;

struct Monomial {
  double coeff = 0.0;
  std::vector<unsigned> exponents;  // one per resource
  bool operator==(const Monomial&) const = default;
};

/// f(x) = sum_t coeff_t * prod_j (x^j)^{e_tj}, with nonnegative coefficients.
class PolynomialCost {
 public:
  PolynomialCost() = default;
  PolynomialCost(std::size_t m, std::vector<Monomial> terms);

  /// coeff * (sum_{v in vars} x^v)^power, expanded into monomials.
  static PolynomialCost power_of_sum(std::size_t m, double coeff, unsigned power,
                                     const std::vector<std::size_t>& vars);
  /// coeff * (x^var)^power.
  static PolynomialCost monomial(std::size_t m, double coeff, unsigned power, std::size_t var);

  /// Adds the terms of `other`, merging equal exponent vectors.
  PolynomialCost& operator+=(const PolynomialCost& other);
  friend PolynomialCost operator+(PolynomialCost a, const PolynomialCost& b) { return a += b; }

  std::size_t dimension() const { return m_; }
  const std::vector<Monomial>& terms() const { return terms_; }

  double evaluate(std::span<const double> x) const;
  Vector gradient(std::span<const double> x) const;
  double partial(std::span<const double> x, std::size_t j) const;
  Eigen::MatrixXd hessian(std::span<const double> x) const;

  std::string to_string() const;
  bool operator==(const PolynomialCost&) const = default;

 private:
  std::size_t m_ = 0;
  std::vector<Monomial> terms_;
};

/// Axis-aligned box sampled on a cell-centred grid of grid_points_per_axis^m
/// points; the faces themselves are never sampled.
struct DomainBox {
  Vector lower;
  Vector upper;
  std::size_t grid_points_per_axis = 64;

  static DomainBox uniform(std::size_t m, double lo, double hi, std::size_t points = 64);

  void validate() const;
  std::size_t dimension() const { return lower.size(); }
  std::size_t grid_size() const;
  void for_each_point(const std::function<void(std::span<const double>)>& fn) const;
  bool operator==(const DomainBox&) const = default;
};

struct FDeltaReport {
  bool pass = true;
  // Smallest of delta*grad_j f and x^j - delta*grad_j f over the grid; pass
  // needs this strictly positive.
  double worst_margin = 0.0;
  Vector worst_point;
  std::size_t worst_resource = 0;
  double min_hessian_eigenvalue = 0.0;
  Vector worst_hessian_point;
  std::string reason;
};

inline constexpr double kHessianTolerance = 1e-10;

FDeltaReport check_f_delta(const PolynomialCost& cost, double delta, const DomainBox& box);

/// Unit-demand cost class check: grad_j g > 0 and Hessian PSD on the box.
FDeltaReport check_increasing_convex(const PolynomialCost& cost, const DomainBox& box);

/// min(delta, margin * min over the box grid and the family of x^j / grad_j f(x)).
double derive_gamma(std::span<const PolynomialCost> costs, std::size_t j, const DomainBox& box,
                    double delta, double margin = 1.0);

/// Reciprocal of the worst-case expected-utilization sum
/// sum_i max_{y in box} y^j / grad_j g_i(y), each agent taking its own maximizer.
double derive_tau(std::span<const PolynomialCost> costs, std::size_t j, const DomainBox& box);

}  // namespace aimd
