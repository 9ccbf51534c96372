#pragma once

// AIMD allocation of divisible resources: a control unit broadcasting one
// capacity-event bit per resource, and agents that ramp additively and back
// off multiplicatively with a probability driven by their own marginal cost.

#include <cstdint>
#include <span>
#include <vector>

#include "aimd/core.hpp"
#include "aimd/cost.hpp"
#include "aimd/trace.hpp"

namespace aimd {

struct DivisibleSimState {
  std::vector<AgentState> agents;
  ControlSignal signal;  // last broadcast
  SystemConfig spec;
  std::uint64_t step = 0;

  ProbabilityStats lambda_stats;
  // Per (agent, resource) capacity-event bookkeeping.
  Matrix events;     // steps with S^j = 1
  Matrix responses;  // of those, steps where the agent backed off
  Matrix lambda_sum; // sum of lambda over the events

  Matrix allocations() const;
  Matrix averages() const;
};

struct RunOptions {
  bool parallel = false;  // step agents concurrently; results are identical
};

/// S^j = 1 iff sum_i allocs(i, j) > headroom^j * C^j.
ControlSignal control_unit_step(const Matrix& allocs, const SystemConfig& spec);
ControlSignal control_unit_step(std::span<const double> totals, const SystemConfig& spec);

/// gamma_norm * grad_j f(avg) / avg^j. Throws NumericError when avg^j == 0.
double compute_lambda(const PolynomialCost& cost, std::span<const double> avg, std::size_t j,
                      double gamma_norm);

/// What an agent step did on each resource; lambda is NaN where no capacity
/// event occurred.
struct DivisibleObservation {
  std::vector<double> lambda;
  std::vector<bool> responded;
};

/// One AIMD update of every resource of one agent, followed by the
/// running-average update. Throws NumericError if a backoff probability falls
/// outside (0, 1).
AgentState agent_step(AgentState state, const ControlSignal& signal, const PolynomialCost& cost,
                      const SystemConfig& spec, DivisibleObservation* obs = nullptr);

DivisibleSimState initial_divisible_state(const SystemConfig& spec);

/// Runs spec.horizon steps: signal from current allocations, then every agent
/// acts on it, then one record goes to the sink.
DivisibleSimState run_divisible(const SystemConfig& spec, std::span<const PolynomialCost> costs,
                                TraceSink& sink, RunOptions options = {});

}  // namespace aimd
