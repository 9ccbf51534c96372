#include "aimd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace aimd {

namespace {

constexpr std::uint64_t kCostDomain = 0x636f737473ULL;      // "costs"
constexpr std::uint64_t kInstanceDomain = 0x696e7374ULL;    // "inst"

TermSpec explicit_term(double coeff, std::string param, std::vector<unsigned> e) {
  TermSpec t;
  t.coeff = coeff;
  t.param = std::move(param);
  t.exponents = std::move(e);
  return t;
}

TermSpec sum_term(double coeff, unsigned power, std::vector<std::size_t> over) {
  TermSpec t;
  t.coeff = coeff;
  t.sum_power = power;
  t.over = std::move(over);
  return t;
}

}  // namespace

ExperimentDef experiment_divisible_paper() {
  ExperimentDef def;
  def.name = "divisible-paper";
  def.mode = Mode::Divisible;
  def.system.n = 60;
  def.system.m = 2;
  const double gamma = 1.0 / 35.0;
  def.system.delta = gamma;
  def.system.resources = {
      ResourceSpec{15.0, 0.01, 0.85, gamma, 1.0},
      ResourceSpec{20.0, 0.012, 0.80, gamma, 1.0},
  };
  def.system.horizon = 50000;
  def.system.master_seed = 1;

  CostClass cls;
  cls.name = "quadratic-quartic";
  cls.proportion = 1.0;
  cls.params = {ParamSpec{"a", "uniform_int", 1, 25}, ParamSpec{"b", "uniform_int", 1, 10}};
  cls.terms = {
      explicit_term(0.5, "a", {2, 0}),
      explicit_term(0.5, "a", {0, 2}),
      explicit_term(0.25, "b", {4, 0}),
      explicit_term(0.25, "b", {0, 4}),
  };
  def.cost_family.classes = {cls};
  def.box = DomainBox::uniform(2, 0.01, 1.0, 64);
  def.oracle_tol = 1e-10;
  def.seeds = {1, 2, 3};
  return def;
}

ExperimentDef experiment_binary_paper() {
  ExperimentDef def;
  def.name = "binary-paper";
  def.mode = Mode::Binary;
  def.system.n = 900;
  def.system.m = 2;
  def.system.delta = 1.0;
  // alpha/beta/gamma_norm are unused by the unit-demand engine.
  def.system.resources = {
      ResourceSpec{450.0, 1.0, 0.5, 1.0, 1.0},
      ResourceSpec{350.0, 1.0, 0.5, 1.0, 1.0},
  };
  def.system.horizon = 20000;
  def.system.master_seed = 1;

  const std::vector<std::size_t> both{0, 1};
  CostClass c1{"class-1", 1.0 / 3.0, {}, {sum_term(0.5, 2, both), sum_term(1.0 / 8.0, 4, both)}};
  CostClass c2{"class-2", 1.0 / 3.0, {}, {sum_term(0.25, 4, both), sum_term(1.0 / 12.0, 6, both)}};
  CostClass c3{"class-3", 1.0 / 3.0, {}, {sum_term(1.0 / 6.0, 6, both), sum_term(1.0 / 16.0, 8, both)}};
  def.cost_family.classes = {c1, c2, c3};
  def.box = DomainBox::uniform(2, 0.01, 1.0, 64);
  def.oracle_tol = 1e-9;
  def.seeds = {1, 2, 3};
  def.binary.omega0 = {0.350, 0.328};
  def.binary.tau = {0.0002275, 0.0002125};
  def.binary.mu_bits = 32;
  return def;
}

std::vector<std::string> experiment_names() { return {"divisible-paper", "binary-paper"}; }

ExperimentDef find_experiment(const std::string& name) {
  if (name == "divisible-paper") return experiment_divisible_paper();
  if (name == "binary-paper") return experiment_binary_paper();
  throw ConfigError("unknown experiment '" + name + "'");
}

ExperimentDef with_seed(ExperimentDef def, std::uint64_t seed) {
  def.system.master_seed = seed;
  return def;
}

std::size_t class_of_agent(const CostFamily& family, std::size_t n, std::size_t agent) {
  if (family.classes.empty()) throw ConfigError("cost family has no classes");
  if (agent >= n) throw ConfigError("class_of_agent: agent index out of range");
  double cumulative = 0.0;
  for (std::size_t c = 0; c < family.classes.size(); ++c) {
    cumulative += family.classes[c].proportion;
    const auto end = static_cast<std::size_t>(std::llround(cumulative * static_cast<double>(n)));
    if (agent < end) return c;
  }
  return family.classes.size() - 1;
}

PolynomialCost build_class_cost(const CostClass& cls, std::size_t m, std::uint64_t seed, std::size_t agent) {
  RandomStream stream(derive_seed(seed, kCostDomain, agent));
  std::vector<std::pair<std::string, double>> values;
  for (const auto& p : cls.params) {
    const double u = stream.uniform();
    double v = 0.0;
    if (p.kind == "uniform_int") {
      if (p.hi < p.lo) throw ConfigError("param '" + p.name + "': hi < lo");
      const double span = std::floor(p.hi) - std::ceil(p.lo) + 1.0;
      v = std::ceil(p.lo) + std::min(std::floor(u * span), span - 1.0);
    } else if (p.kind == "uniform_real") {
      if (p.hi < p.lo) throw ConfigError("param '" + p.name + "': hi < lo");
      v = p.lo + u * (p.hi - p.lo);
    } else if (p.kind == "constant") {
      v = p.lo;
    } else {
      throw ConfigError("param '" + p.name + "': unknown kind '" + p.kind + "'");
    }
    values.emplace_back(p.name, v);
  }
  auto lookup = [&](const std::string& name) {
    if (name.empty()) return 1.0;
    for (const auto& [k, v] : values)
      if (k == name) return v;
    throw ConfigError("cost term references unknown param '" + name + "'");
  };
  PolynomialCost cost(m, {});
  for (const auto& t : cls.terms) {
    const double coeff = t.coeff * lookup(t.param);
    if (t.sum_power > 0) {
      cost += PolynomialCost::power_of_sum(m, coeff, t.sum_power, t.over);
    } else {
      if (t.exponents.size() != m) throw ConfigError("cost term exponent vector must have m entries");
      cost += PolynomialCost(m, {Monomial{coeff, t.exponents}});
    }
  }
  return cost;
}

std::vector<PolynomialCost> build_costs(const ExperimentDef& def) {
  std::vector<PolynomialCost> costs;
  costs.reserve(def.system.n);
  for (std::size_t i = 0; i < def.system.n; ++i) {
    const auto& cls = def.cost_family.classes.at(class_of_agent(def.cost_family, def.system.n, i));
    costs.push_back(build_class_cost(cls, def.system.m, def.system.master_seed, i));
  }
  return costs;
}

void validate_experiment(const ExperimentDef& def) {
  def.system.validate();
  if (def.cost_family.classes.empty()) throw ConfigError("experiment: cost family has no classes");
  double total = 0.0;
  for (const auto& c : def.cost_family.classes) {
    if (!(c.proportion >= 0.0)) throw ConfigError("experiment: class proportions must be nonnegative");
    total += c.proportion;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("experiment: class proportions must sum to 1");
  if (def.box.dimension() != def.system.m) throw ConfigError("experiment: box dimension != m");
  def.box.validate();
  if (!(def.oracle_tol > 0.0)) throw ConfigError("experiment: oracle_tol must be positive");
  if (def.mode == Mode::Binary) {
    (void)initial_omega(def.system, def.binary);
    if (def.binary.mu_bits == 0) throw ConfigError("experiment: mu_bits must be positive");
  }
  const auto costs = build_costs(def);
  std::vector<const PolynomialCost*> checked;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (std::any_of(checked.begin(), checked.end(), [&](const PolynomialCost* c) { return *c == costs[i]; }))
      continue;
    checked.push_back(&costs[i]);
    const FDeltaReport r = def.mode == Mode::Divisible ? check_f_delta(costs[i], def.system.delta, def.box)
                                                       : check_increasing_convex(costs[i], def.box);
    if (!r.pass) {
      std::ostringstream os;
      os << "experiment: cost of agent " << i << " (" << costs[i].to_string() << ") fails class check: " << r.reason;
      throw ConfigError(os.str());
    }
  }
}

ConvexProgram program_for(const ExperimentDef& def, const std::vector<PolynomialCost>& costs) {
  ConvexProgram p;
  p.costs = costs;
  for (const auto& r : def.system.resources) p.capacities.push_back(r.capacity);
  if (def.mode == Mode::Binary) p.box_upper = 1.0;
  return p;
}

namespace {

// Root of a x + b x^3 = mu on x >= 0 (a > 0, b >= 0).
double solve_marginal(double a, double b, double mu) {
  double lo = 0.0;
  double hi = mu / a;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (a * mid + b * mid * mid * mid < mu ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

RandomInstance generate_random_instance(std::uint64_t seed, std::size_t n, std::size_t m,
                                        const FamilyBounds& bounds) {
  if (n == 0 || m == 0) throw ConfigError("random instance: n and m must be positive");
  if (!(bounds.a_lo > 0.0 && bounds.a_lo <= bounds.a_hi)) throw ConfigError("random instance: bad a bounds");
  if (!bounds.quadratic_only && !(bounds.b_lo >= 0.0 && bounds.b_lo <= bounds.b_hi))
    throw ConfigError("random instance: bad b bounds");
  RandomStream rng(derive_seed(seed, kInstanceDomain));
  auto uni = [&](double lo, double hi) { return lo + rng.uniform() * (hi - lo); };

  std::vector<std::vector<double>> a(n, std::vector<double>(m));
  std::vector<std::vector<double>> b(n, std::vector<double>(m, 0.0));
  RandomInstance inst;
  inst.costs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PolynomialCost cost(m, {});
    for (std::size_t j = 0; j < m; ++j) {
      a[i][j] = uni(bounds.a_lo, bounds.a_hi);
      cost += PolynomialCost::monomial(m, 0.5 * a[i][j], 2, j);
      if (!bounds.quadratic_only) {
        b[i][j] = uni(bounds.b_lo, bounds.b_hi);
        if (b[i][j] > 0.0) cost += PolynomialCost::monomial(m, 0.25 * b[i][j], 4, j);
      }
    }
    inst.costs.push_back(std::move(cost));
  }
  inst.box = DomainBox::uniform(m, bounds.box_lo, bounds.box_hi, m <= 2 ? 64 : 16);

  double worst = 0.0;  // max over agents/resources of grad_j f / x^j on the box
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      worst = std::max(worst, a[i][j] + b[i][j] * bounds.box_hi * bounds.box_hi);
  const double delta = bounds.delta.value_or(0.9 / worst);
  for (std::size_t i = 0; i < n; ++i) {
    const FDeltaReport r = check_f_delta(inst.costs[i], delta, inst.box);
    if (!r.pass) throw ConfigError("random instance: bounds leave F_delta (" + r.reason + ")");
  }

  SystemConfig& sys = inst.system;
  sys.n = n;
  sys.m = m;
  sys.delta = delta;
  sys.master_seed = seed;
  sys.horizon = 0;
  for (std::size_t j = 0; j < m; ++j) {
    double a_min = bounds.a_hi;
    double b_min = bounds.quadratic_only ? 0.0 : bounds.b_hi;
    for (std::size_t i = 0; i < n; ++i) {
      a_min = std::min(a_min, a[i][j]);
      b_min = std::min(b_min, b[i][j]);
    }
    // Largest optimal share lands at `top`, inside the box.
    const double top = uni(0.3, 0.8) * bounds.box_hi;
    const double mu = a_min * top + b_min * top * top * top;
    double capacity = 0.0;
    for (std::size_t i = 0; i < n; ++i) capacity += solve_marginal(a[i][j], b[i][j], mu);
    ResourceSpec r;
    r.capacity = capacity;
    r.alpha = uni(0.002, 0.01) * capacity / static_cast<double>(n);
    r.beta = uni(0.6, 0.9);
    r.gamma_norm = derive_gamma(inst.costs, j, inst.box, delta);
    r.headroom = 1.0;
    sys.resources.push_back(r);
  }
  sys.validate();
  return inst;
}

}  // namespace aimd
