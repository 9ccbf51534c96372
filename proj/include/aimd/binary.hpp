#pragma once

// Unit-demand allocation: each step every agent demands 0 or 1 unit of each
// resource with probability sigma = Omega * y / grad g(y), where the control
// unit adjusts Omega by integral feedback on demand minus capacity.

#include <cstdint>
#include <span>
#include <vector>

#include "aimd/core.hpp"
#include "aimd/cost.hpp"
#include "aimd/divisible.hpp"  // RunOptions
#include "aimd/trace.hpp"

namespace aimd {

inline constexpr double kOmegaFloor = 1e-9;
inline constexpr double kSigmaReseed = 0.5;

struct BinaryInit {
  std::vector<double> omega0;  // empty: tau^j * C^j * 10 per resource
  std::vector<double> tau;
  unsigned mu_bits = 32;       // width of one broadcast Omega value

  bool operator==(const BinaryInit&) const = default;
};

struct BinarySimState {
  std::vector<AgentState> agents;
  std::vector<double> omega;  // last broadcast
  std::vector<double> tau;
  SystemConfig spec;
  std::uint64_t step = 0;
  unsigned mu_bits = 32;

  ProbabilityStats sigma_stats;
  std::uint64_t omega_floor_hits = 0;

  Matrix allocations() const;
  Matrix averages() const;
};

/// omega_k - tau * (total_demand - headroom * capacity), floored at kOmegaFloor.
double omega_update(double omega_k, double tau, double total_demand, double capacity, double headroom);

/// How compute_sigma arrived at its value.
enum class SigmaCase { Ratio, Clamped, Reseeded };

/// min(1, omega_j * avg^j / grad_j g(avg)); kSigmaReseed at the degenerate
/// origin avg^j == grad_j g == 0. Throws NumericError if grad_j g < 0.
double compute_sigma(const PolynomialCost& cost, std::span<const double> avg, std::size_t j, double omega_j,
                     SigmaCase* how = nullptr);

struct BinaryObservation {
  std::vector<double> sigma;
  std::vector<SigmaCase> how;
};

/// One draw per resource from the agent's own streams; xi' = b, y updated.
AgentState binary_agent_step(AgentState state, std::span<const double> omega, const PolynomialCost& cost,
                             BinaryObservation* obs = nullptr);

/// Omega^j(0) from init, falling back to tau^j * C^j * 10.
std::vector<double> initial_omega(const SystemConfig& spec, const BinaryInit& init);

BinarySimState initial_binary_state(const SystemConfig& spec, const BinaryInit& init);

/// Per step: Omega(k+1) from the step-k demands, broadcast, then every agent
/// draws its step-(k+1) demand; one record per step.
BinarySimState run_binary(const SystemConfig& spec, std::span<const PolynomialCost> costs,
                          const BinaryInit& init, TraceSink& sink, RunOptions options = {});

}  // namespace aimd
