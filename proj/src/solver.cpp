#include "aimd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace aimd {

void ConvexProgram::validate() const {
  if (costs.empty()) throw ConfigError("program: no agents");
  if (capacities.empty()) throw ConfigError("program: no resources");
  for (const auto& c : costs)
    if (c.dimension() != capacities.size()) throw ConfigError("program: cost dimension != resource count");
  for (double c : capacities)
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("program: capacities must be positive");
  if (box_upper) {
    if (!(*box_upper > 0.0)) throw ConfigError("program: box_upper must be positive");
    for (std::size_t j = 0; j < capacities.size(); ++j)
      if (static_cast<double>(costs.size()) * *box_upper < capacities[j]) {
        std::ostringstream os;
        os << "program: resource " << j << " capacity " << capacities[j] << " exceeds n * cap = "
           << static_cast<double>(costs.size()) * *box_upper;
        throw InfeasibleError(os.str());
      }
  }
}

std::vector<double> project_capped_simplex(std::span<const double> v, double total, std::optional<double> cap) {
  const std::size_t n = v.size();
  if (n == 0) throw ConfigError("project_capped_simplex: empty vector");
  if (!(total > 0.0)) throw ConfigError("project_capped_simplex: total must be positive");
  if (cap) {
    if (!(*cap > 0.0)) throw ConfigError("project_capped_simplex: cap must be positive");
    if (static_cast<double>(n) * *cap < total) throw InfeasibleError("project_capped_simplex: n * cap < total");
  }
  const double upper = cap.value_or(std::numeric_limits<double>::infinity());
  auto clip = [&](double x) { return std::clamp(x, 0.0, upper); };
  auto mass = [&](double theta) {
    double s = 0.0;
    for (double x : v) s += clip(x - theta);
    return s;
  };

  // mass(theta) is continuous and nonincreasing; bracket total and bisect.
  const auto [vmin, vmax] = std::minmax_element(v.begin(), v.end());
  double hi = *vmax;
  double lo = *vmin - total / static_cast<double>(n) - 1.0;
  if (cap) lo = std::min(lo, *vmin - *cap - 1.0);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi) + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > total ? lo : hi) = mid;
  }
  double theta = 0.5 * (lo + hi);

  // Resolve the threshold exactly on the identified active set.
  double fixed_mass = 0.0;
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (double x : v) {
    const double w = x - theta;
    if (w <= 0.0) continue;
    if (w >= upper) {
      fixed_mass += upper;
    } else {
      free_sum += x;
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum + fixed_mass - total) / static_cast<double>(free_count);
    if (std::abs(mass(exact) - total) <= std::abs(mass(theta) - total)) theta = exact;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = clip(v[i] - theta);
  return w;
}

namespace {

struct ColumnKkt {
  double spread = 0.0;
  double sign_violation = 0.0;
};

ColumnKkt column_kkt(const Matrix& x, std::span<const PolynomialCost> costs, std::size_t j,
                     std::optional<double> cap) {
  const double upper = cap.value_or(std::numeric_limits<double>::infinity());
  double gmin = std::numeric_limits<double>::infinity();
  double gmax = -std::numeric_limits<double>::infinity();
  double lower_min = std::numeric_limits<double>::infinity();   // agents at 0
  double upper_max = -std::numeric_limits<double>::infinity();  // agents at cap
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(i, c);
    const double xij = row[j];
    const double g = costs[static_cast<std::size_t>(i)].partial(row, j);
    if (xij <= kInteriorEps) {
      lower_min = std::min(lower_min, g);
    } else if (xij >= upper - kInteriorEps) {
      upper_max = std::max(upper_max, g);
    } else {
      gmin = std::min(gmin, g);
      gmax = std::max(gmax, g);
    }
  }
  ColumnKkt out;
  if (gmin <= gmax) {
    out.spread = gmax - gmin;
    if (std::isfinite(lower_min)) out.sign_violation += std::max(0.0, gmin - lower_min);
    if (std::isfinite(upper_max)) out.sign_violation += std::max(0.0, upper_max - gmax);
  } else if (std::isfinite(lower_min) && std::isfinite(upper_max)) {
    out.sign_violation = std::max(0.0, upper_max - lower_min);
  }
  return out;
}

void check_shape(const Matrix& x, std::size_t n) {
  if (static_cast<std::size_t>(x.rows()) != n) throw ConfigError("solution rows != number of costs");
}

}  // namespace

std::vector<double> kkt_consensus_residual(const Matrix& solution, std::span<const PolynomialCost> costs,
                                           std::optional<double> cap) {
  check_shape(solution, costs.size());
  std::vector<double> out(static_cast<std::size_t>(solution.cols()));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = column_kkt(solution, costs, j, cap).spread;
  return out;
}

double kkt_residual(const ConvexProgram& program, const Matrix& solution) {
  check_shape(solution, program.agents());
  const double upper = program.box_upper.value_or(std::numeric_limits<double>::infinity());
  double worst = 0.0;
  for (std::size_t j = 0; j < program.resources(); ++j) {
    const auto col = solution.col(static_cast<Eigen::Index>(j));
    double infeasible = std::abs(col.sum() - program.capacities[j]);
    for (Eigen::Index i = 0; i < col.size(); ++i)
      infeasible += std::max(0.0, -col(i)) + std::max(0.0, col(i) - upper);
    const ColumnKkt k = column_kkt(solution, program.costs, j, program.box_upper);
    worst = std::max(worst, k.spread + k.sign_violation + infeasible);
  }
  return worst;
}

double objective(std::span<const PolynomialCost> costs, const Matrix& x) {
  check_shape(x, costs.size());
  double total = 0.0;
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(i, c);
    total += costs[static_cast<std::size_t>(i)].evaluate(row);
  }
  return total;
}

namespace {

Matrix gradient_matrix(std::span<const PolynomialCost> costs, const Matrix& x) {
  Matrix g(x.rows(), x.cols());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(i, c);
    const auto grad = costs[static_cast<std::size_t>(i)].gradient(row);
    for (Eigen::Index c = 0; c < x.cols(); ++c) g(i, c) = grad[static_cast<std::size_t>(c)];
  }
  return g;
}

Matrix project(const ConvexProgram& p, const Matrix& v) {
  Matrix out(v.rows(), v.cols());
  std::vector<double> col(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) col[static_cast<std::size_t>(i)] = v(i, j);
    const auto w = project_capped_simplex(col, p.capacities[static_cast<std::size_t>(j)], p.box_upper);
    for (Eigen::Index i = 0; i < v.rows(); ++i) out(i, j) = w[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

SolverResult solve(const ConvexProgram& program, double tol, std::uint64_t max_iters) {
  program.validate();
  if (!(tol > 0.0)) throw ConfigError("solve: tol must be positive");
  const auto n = static_cast<Eigen::Index>(program.agents());
  const auto m = static_cast<Eigen::Index>(program.resources());

  Matrix x(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    x.col(j).setConstant(program.capacities[static_cast<std::size_t>(j)] / static_cast<double>(n));
  x = project(program, x);

  double f = objective(program.costs, x);
  Matrix g = gradient_matrix(program.costs, x);
  double step = 1.0;

  SolverResult result;
  for (result.iterations = 0; result.iterations < max_iters; ++result.iterations) {
    result.kkt_residual = kkt_residual(program, x);
    if (result.kkt_residual < tol) {
      result.converged = true;
      break;
    }
    // Backtracking on the projected step until the quadratic upper model holds.
    Matrix trial;
    Matrix d;
    double f_trial = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      trial = project(program, x - step * g);
      d = trial - x;
      f_trial = objective(program.costs, trial);
      const double model = f + (g.array() * d.array()).sum() + d.squaredNorm() / (2.0 * step);
      if (f_trial <= model + 1e-15 * std::abs(f)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || d.squaredNorm() == 0.0) break;  // stalled at machine precision
    const Matrix g_next = gradient_matrix(program.costs, trial);
    const double sy = (d.array() * (g_next - g).array()).sum();
    // Barzilai-Borwein trial step for the next iteration.
    step = sy > 0.0 ? std::clamp(d.squaredNorm() / sy, 1e-12, 1e12) : step * 2.0;
    x = std::move(trial);
    f = f_trial;
    g = g_next;
  }
  if (!result.converged) {
    result.kkt_residual = kkt_residual(program, x);
    result.converged = result.kkt_residual < tol;
  }
  result.solution = std::move(x);
  result.objective = f;
  return result;
}

}  // namespace aimd
