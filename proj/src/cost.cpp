#include "aimd/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "aimd/core.hpp"

namespace aimd {

namespace {

double ipow(double base, unsigned e) {
  double r = 1.0;
  while (e != 0) {
    if (e & 1U) r *= base;
    base *= base;
    e >>= 1U;
  }
  return r;
}

double factorial(unsigned k) {
  double r = 1.0;
  for (unsigned i = 2; i <= k; ++i) r *= i;
  return r;
}

void check_point(std::size_t m, std::span<const double> x) {
  if (x.size() != m) {
    std::ostringstream os;
    os << "cost: point has " << x.size() << " coordinates, cost has " << m;
    throw ConfigError(os.str());
  }
}

}  // namespace

PolynomialCost::PolynomialCost(std::size_t m, std::vector<Monomial> terms) : m_(m) {
  for (auto& t : terms) {
    if (t.exponents.size() != m) throw ConfigError("cost: monomial exponent arity mismatch");
    if (!(t.coeff >= 0.0) || !std::isfinite(t.coeff))
      throw ConfigError("cost: coefficients must be finite and nonnegative");
  }
  terms_ = std::move(terms);
  *this += PolynomialCost{};  // canonicalize (merge duplicates, sort)
}

PolynomialCost& PolynomialCost::operator+=(const PolynomialCost& other) {
  if (m_ == 0) m_ = other.m_;
  if (other.m_ != 0 && other.m_ != m_) throw ConfigError("cost: adding costs of different dimension");
  std::map<std::vector<unsigned>, double> merged;
  for (const auto& t : terms_) merged[t.exponents] += t.coeff;
  for (const auto& t : other.terms_) merged[t.exponents] += t.coeff;
  terms_.clear();
  for (auto& [e, c] : merged)
    if (c != 0.0) terms_.push_back({c, e});
  return *this;
}

PolynomialCost PolynomialCost::power_of_sum(std::size_t m, double coeff, unsigned power,
                                            const std::vector<std::size_t>& vars) {
  if (vars.empty()) throw ConfigError("cost: power_of_sum needs at least one variable");
  for (auto v : vars)
    if (v >= m) throw ConfigError("cost: power_of_sum variable out of range");
  std::vector<Monomial> terms;
  std::vector<unsigned> e(m, 0);
  // Distribute `power` over vars; coefficient power! / prod e_v!.
  const auto recurse = [&](auto&& self, std::size_t idx, unsigned remaining) -> void {
    if (idx + 1 == vars.size()) {
      e[vars[idx]] += remaining;
      double denom = 1.0;
      for (auto v : vars) denom *= factorial(e[v]);
      terms.push_back({coeff * factorial(power) / denom, e});
      e[vars[idx]] -= remaining;
      return;
    }
    for (unsigned k = 0; k <= remaining; ++k) {
      e[vars[idx]] += k;
      self(self, idx + 1, remaining - k);
      e[vars[idx]] -= k;
    }
  };
  recurse(recurse, 0, power);
  return PolynomialCost(m, std::move(terms));
}

PolynomialCost PolynomialCost::monomial(std::size_t m, double coeff, unsigned power, std::size_t var) {
  if (var >= m) throw ConfigError("cost: monomial variable out of range");
  std::vector<unsigned> e(m, 0);
  e[var] = power;
  return PolynomialCost(m, {{coeff, e}});
}

double PolynomialCost::evaluate(std::span<const double> x) const {
  check_point(m_, x);
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coeff;
    for (std::size_t j = 0; j < m_; ++j) v *= ipow(x[j], t.exponents[j]);
    sum += v;
  }
  return sum;
}

double PolynomialCost::partial(std::span<const double> x, std::size_t j) const {
  check_point(m_, x);
  double sum = 0.0;
  for (const auto& t : terms_) {
    const unsigned ej = t.exponents[j];
    if (ej == 0) continue;
    double v = t.coeff * ej * ipow(x[j], ej - 1);
    for (std::size_t l = 0; l < m_; ++l)
      if (l != j) v *= ipow(x[l], t.exponents[l]);
    sum += v;
  }
  return sum;
}

Vector PolynomialCost::gradient(std::span<const double> x) const {
  Vector g(m_);
  for (std::size_t j = 0; j < m_; ++j) g[j] = partial(x, j);
  return g;
}

Eigen::MatrixXd PolynomialCost::hessian(std::span<const double> x) const {
  check_point(m_, x);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
  for (const auto& t : terms_) {
    for (std::size_t a = 0; a < m_; ++a) {
      for (std::size_t b = a; b < m_; ++b) {
        std::vector<unsigned> e = t.exponents;
        double v = t.coeff;
        if (e[a] == 0) continue;
        v *= e[a];
        --e[a];
        if (e[b] == 0) continue;
        v *= e[b];
        --e[b];
        for (std::size_t l = 0; l < m_; ++l) v *= ipow(x[l], e[l]);
        h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += v;
        if (a != b) h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) += v;
      }
    }
  }
  return h;
}

std::string PolynomialCost::to_string() const {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& t : terms_) {
    if (!first) os << " + ";
    first = false;
    os << t.coeff;
    for (std::size_t j = 0; j < m_; ++j)
      if (t.exponents[j] != 0) os << "*x" << j << "^" << t.exponents[j];
  }
  if (first) os << "0";
  return os.str();
}

DomainBox DomainBox::uniform(std::size_t m, double lo, double hi, std::size_t points) {
  return DomainBox{Vector(m, lo), Vector(m, hi), points};
}

void DomainBox::validate() const {
  if (lower.empty() || lower.size() != upper.size())
    throw ConfigError("box: lower/upper must be nonempty and of equal length");
  if (grid_points_per_axis == 0) throw ConfigError("box: grid_points_per_axis must be positive");
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (!(lower[j] > 0.0)) throw ConfigError("box: lower bounds must be strictly positive");
    if (!(lower[j] < upper[j])) throw ConfigError("box: lower must be < upper componentwise");
  }
}

std::size_t DomainBox::grid_size() const {
  std::size_t total = 1;
  for (std::size_t j = 0; j < lower.size(); ++j) total *= grid_points_per_axis;
  return total;
}

void DomainBox::for_each_point(const std::function<void(std::span<const double>)>& fn) const {
  validate();
  const std::size_t m = lower.size();
  const std::size_t g = grid_points_per_axis;
  std::vector<std::size_t> idx(m, 0);
  Vector x(m);
  const std::size_t total = grid_size();
  for (std::size_t count = 0; count < total; ++count) {
    for (std::size_t j = 0; j < m; ++j)
      x[j] = lower[j] + (static_cast<double>(idx[j]) + 0.5) * (upper[j] - lower[j]) / static_cast<double>(g);
    fn(x);
    for (std::size_t j = 0; j < m; ++j) {
      if (++idx[j] < g) break;
      idx[j] = 0;
    }
  }
}

namespace {

double min_eigenvalue(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void check_box_matches(const PolynomialCost& cost, const DomainBox& box) {
  box.validate();
  if (box.dimension() != cost.dimension()) throw ConfigError("box dimension does not match cost dimension");
}

}  // namespace

FDeltaReport check_f_delta(const PolynomialCost& cost, double delta, const DomainBox& box) {
  check_box_matches(cost, box);
  if (!(delta > 0.0)) throw ConfigError("check_f_delta: delta must be > 0");
  FDeltaReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  report.min_hessian_eigenvalue = std::numeric_limits<double>::infinity();
  box.for_each_point([&](std::span<const double> x) {
    for (std::size_t j = 0; j < cost.dimension(); ++j) {
      const double scaled = delta * cost.partial(x, j);
      const double margin = std::min(scaled, x[j] - scaled);
      if (margin < report.worst_margin) {
        report.worst_margin = margin;
        report.worst_point.assign(x.begin(), x.end());
        report.worst_resource = j;
      }
    }
    const double eig = min_eigenvalue(cost.hessian(x));
    if (eig < report.min_hessian_eigenvalue) {
      report.min_hessian_eigenvalue = eig;
      report.worst_hessian_point.assign(x.begin(), x.end());
    }
  });
  std::ostringstream os;
  if (!(report.worst_margin > 0.0)) {
    report.pass = false;
    os << "0 < delta*grad_" << report.worst_resource << " f < x fails (margin " << report.worst_margin
       << ")";
  }
  if (report.min_hessian_eigenvalue < -kHessianTolerance) {
    report.pass = false;
    if (!os.str().empty()) os << "; ";
    os << "Hessian not PSD (min eigenvalue " << report.min_hessian_eigenvalue << ")";
  }
  report.reason = os.str();
  return report;
}

FDeltaReport check_increasing_convex(const PolynomialCost& cost, const DomainBox& box) {
  check_box_matches(cost, box);
  FDeltaReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  report.min_hessian_eigenvalue = std::numeric_limits<double>::infinity();
  box.for_each_point([&](std::span<const double> x) {
    for (std::size_t j = 0; j < cost.dimension(); ++j) {
      const double g = cost.partial(x, j);
      if (g < report.worst_margin) {
        report.worst_margin = g;
        report.worst_point.assign(x.begin(), x.end());
        report.worst_resource = j;
      }
    }
    const double eig = min_eigenvalue(cost.hessian(x));
    if (eig < report.min_hessian_eigenvalue) {
      report.min_hessian_eigenvalue = eig;
      report.worst_hessian_point.assign(x.begin(), x.end());
    }
  });
  std::ostringstream os;
  if (!(report.worst_margin > 0.0)) {
    report.pass = false;
    os << "grad_" << report.worst_resource << " g not positive (min " << report.worst_margin << ")";
  }
  if (report.min_hessian_eigenvalue < -kHessianTolerance) {
    report.pass = false;
    if (!os.str().empty()) os << "; ";
    os << "Hessian not PSD (min eigenvalue " << report.min_hessian_eigenvalue << ")";
  }
  report.reason = os.str();
  return report;
}

double derive_gamma(std::span<const PolynomialCost> costs, std::size_t j, const DomainBox& box,
                    double delta, double margin) {
  if (costs.empty()) throw ConfigError("derive_gamma: empty cost family");
  if (!(delta > 0.0)) throw ConfigError("derive_gamma: delta must be > 0");
  if (!(margin > 0.0 && margin <= 1.0)) throw ConfigError("derive_gamma: margin must lie in (0, 1]");
  if (j >= box.dimension()) throw ConfigError("derive_gamma: resource index out of range");
  double inf = std::numeric_limits<double>::infinity();
  std::vector<const PolynomialCost*> unique;
  for (const auto& c : costs)
    if (std::none_of(unique.begin(), unique.end(), [&](const PolynomialCost* u) { return *u == c; }))
      unique.push_back(&c);
  for (const auto* cost : unique) {
    check_box_matches(*cost, box);
    box.for_each_point([&](std::span<const double> x) {
      const double g = cost->partial(x, j);
      if (!(g > 0.0)) {
        std::ostringstream os;
        os << "derive_gamma: grad_" << j << " f <= 0 at a box point with x^" << j << " = " << x[j]
           << " (cost not in F_delta)";
        throw NumericError(os.str());
      }
      inf = std::min(inf, x[j] / g);
    });
  }
  return std::min(delta, margin * inf);
}

double derive_tau(std::span<const PolynomialCost> costs, std::size_t j, const DomainBox& box) {
  if (costs.empty()) throw ConfigError("derive_tau: empty cost family");
  if (j >= box.dimension()) throw ConfigError("derive_tau: resource index out of range");
  // Agents pick their maximizers independently, so the worst-case sum is the
  // sum of per-agent maxima; identical costs share one grid scan.
  std::vector<std::pair<const PolynomialCost*, double>> cache;
  double total = 0.0;
  for (const auto& cost : costs) {
    auto it = std::find_if(cache.begin(), cache.end(), [&](const auto& e) { return *e.first == cost; });
    if (it == cache.end()) {
      check_box_matches(cost, box);
      double best = 0.0;
      box.for_each_point([&](std::span<const double> y) {
        const double g = cost.partial(y, j);
        if (!(g > 0.0)) {
          std::ostringstream os;
          os << "derive_tau: division by zero, grad_" << j << " g = " << g << " at y^" << j << " = " << y[j];
          throw NumericError(os.str());
        }
        best = std::max(best, y[j] / g);
      });
      cache.emplace_back(&cost, best);
      it = std::prev(cache.end());
    }
    total += it->second;
  }
  return 1.0 / total;
}

}  // namespace aimd
