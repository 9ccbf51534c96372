#pragma once

// Canned experiments, cost-family generators and randomized instances.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aimd/binary.hpp"
#include "aimd/core.hpp"
#include "aimd/cost.hpp"
#include "aimd/solver.hpp"

namespace aimd {

/// A per-agent random coefficient. kind is one of "uniform_int" (integers in
/// [lo, hi]), "uniform_real" ([lo, hi)) or "constant" (always lo).
struct ParamSpec {
  std::string name;
  std::string kind = "constant";
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const ParamSpec&) const = default;
};

/// coeff * (param value, if named) * monomial. The monomial is either an
/// explicit exponent vector or, when sum_power > 0, (sum_{v in over} x^v)^sum_power.
struct TermSpec {
  double coeff = 1.0;
  std::string param;
  std::vector<unsigned> exponents;
  unsigned sum_power = 0;
  std::vector<std::size_t> over;
  bool operator==(const TermSpec&) const = default;
};

struct CostClass {
  std::string name;
  double proportion = 1.0;
  std::vector<ParamSpec> params;
  std::vector<TermSpec> terms;
  bool operator==(const CostClass&) const = default;
};

/// Classes are assigned to contiguous agent index blocks in order, block c
/// ending at round(n * cumulative proportion).
struct CostFamily {
  std::vector<CostClass> classes;
  bool operator==(const CostFamily&) const = default;
};

struct ExperimentDef {
  std::string name;
  Mode mode = Mode::Divisible;
  SystemConfig system;
  CostFamily cost_family;
  DomainBox box;  // where cost-class membership is verified
  double oracle_tol = 1e-10;
  std::vector<std::uint64_t> seeds;
  BinaryInit binary;  // used in binary mode only

  bool operator==(const ExperimentDef&) const = default;
};

/// 60 agents, two divisible resources, quadratic-plus-quartic costs.
ExperimentDef experiment_divisible_paper();
/// 900 agents, two unit-demand resources, three cost classes of (y1+y2).
ExperimentDef experiment_binary_paper();

std::vector<std::string> experiment_names();
/// Throws ConfigError for an unknown name.
ExperimentDef find_experiment(const std::string& name);

/// Copy with system.master_seed replaced.
ExperimentDef with_seed(ExperimentDef def, std::uint64_t seed);

std::size_t class_of_agent(const CostFamily& family, std::size_t n, std::size_t agent);

/// One cost per agent; coefficients drawn from the experiment's master seed
/// on a stream disjoint from the agent streams.
std::vector<PolynomialCost> build_costs(const ExperimentDef& def);
PolynomialCost build_class_cost(const CostClass& cls, std::size_t m, std::uint64_t seed, std::size_t agent);

/// Throws ConfigError unless the system validates, proportions sum to 1,
/// binary parameters match m, and every built cost passes the class check on
/// the box (F_delta for divisible, increasing + convex for binary).
void validate_experiment(const ExperimentDef& def);

/// The allocation program whose solution the run's averages should approach.
ConvexProgram program_for(const ExperimentDef& def, const std::vector<PolynomialCost>& costs);

struct FamilyBounds {
  double a_lo = 1.0;
  double a_hi = 25.0;
  double b_lo = 1.0;
  double b_hi = 10.0;
  bool quadratic_only = false;
  double box_lo = 0.01;
  double box_hi = 1.0;
  std::optional<double> delta;  // default: largest value keeping the family in F_delta, times 0.9
};

struct RandomInstance {
  SystemConfig system;
  std::vector<PolynomialCost> costs;
  DomainBox box;
};

/// f_i = sum_j a_ij/2 (x^j)^2 + b_ij/4 (x^j)^4 with coefficients uniform in
/// the bounds; Gamma^j derived from the family; capacities keep the optimum
/// inside the box. Throws ConfigError if any cost fails check_f_delta.
RandomInstance generate_random_instance(std::uint64_t seed, std::size_t n, std::size_t m,
                                        const FamilyBounds& bounds = {});

}  // namespace aimd
