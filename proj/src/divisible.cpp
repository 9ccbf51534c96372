#include "aimd/divisible.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "parallel.hpp"

namespace aimd {

Matrix DivisibleSimState::allocations() const {
  Matrix out(static_cast<Eigen::Index>(agents.size()), static_cast<Eigen::Index>(spec.m));
  for (std::size_t i = 0; i < agents.size(); ++i)
    for (std::size_t j = 0; j < spec.m; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = agents[i].alloc[j];
  return out;
}

Matrix DivisibleSimState::averages() const {
  Matrix out(static_cast<Eigen::Index>(agents.size()), static_cast<Eigen::Index>(spec.m));
  for (std::size_t i = 0; i < agents.size(); ++i)
    for (std::size_t j = 0; j < spec.m; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = agents[i].avg[j];
  return out;
}

ControlSignal control_unit_step(std::span<const double> totals, const SystemConfig& spec) {
  if (totals.size() != spec.m) throw ConfigError("control_unit_step: totals length != m");
  std::vector<bool> bits(spec.m);
  for (std::size_t j = 0; j < spec.m; ++j)
    bits[j] = totals[j] > spec.resources[j].headroom * spec.resources[j].capacity;
  return ControlSignal::divisible(std::move(bits));
}

ControlSignal control_unit_step(const Matrix& allocs, const SystemConfig& spec) {
  if (static_cast<std::size_t>(allocs.cols()) != spec.m)
    throw ConfigError("control_unit_step: allocation matrix has wrong column count");
  std::vector<double> totals(spec.m);
  for (std::size_t j = 0; j < spec.m; ++j) totals[j] = allocs.col(static_cast<Eigen::Index>(j)).sum();
  return control_unit_step(totals, spec);
}

double compute_lambda(const PolynomialCost& cost, std::span<const double> avg, std::size_t j,
                      double gamma_norm) {
  if (j >= avg.size()) throw ConfigError("compute_lambda: resource index out of range");
  if (avg[j] == 0.0) throw NumericError("compute_lambda: degenerate average (avg^j == 0)");
  return gamma_norm * cost.partial(avg, j) / avg[j];
}

AgentState agent_step(AgentState state, const ControlSignal& signal, const PolynomialCost& cost,
                      const SystemConfig& spec, DivisibleObservation* obs) {
  const std::size_t m = spec.m;
  if (signal.mode != Mode::Divisible || signal.bits.size() != m)
    throw ConfigError("agent_step: expected a divisible signal with m bits");
  if (state.alloc.size() != m || state.avg.size() != m || state.streams.size() != m)
    throw ConfigError("agent_step: agent state has wrong dimension");
  if (obs != nullptr) {
    obs->lambda.assign(m, std::numeric_limits<double>::quiet_NaN());
    obs->responded.assign(m, false);
  }
  // Probabilities use the step-k averages for every resource, so evaluate all
  // of them before touching any allocation.
  std::vector<double> lambda(m, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < m; ++j) {
    if (!signal.bits[j]) continue;
    if (state.avg[j] == 0.0) {
      lambda[j] = 1.0;  // nothing allocated on average yet: always back off
      continue;
    }
    const double l = compute_lambda(cost, state.avg, j, spec.resources[j].gamma_norm);
    if (!(l > 0.0 && l < 1.0)) {
      std::ostringstream os;
      os << "probability bound violated: lambda^" << j << " = " << l << " at step " << state.step
         << " (avg " << state.avg[j] << ")";
      throw NumericError(os.str());
    }
    lambda[j] = l;
  }
  for (std::size_t j = 0; j < m; ++j) {
    const ResourceSpec& r = spec.resources[j];
    if (signal.bits[j]) {
      const bool respond = bernoulli(state.streams[j], lambda[j]);
      if (respond) state.alloc[j] *= r.beta;
      if (obs != nullptr) {
        obs->lambda[j] = lambda[j];
        obs->responded[j] = respond;
      }
    } else {
      // Burn the step's draw so stream position tracks the step count.
      (void)state.streams[j].next_u64();
      state.alloc[j] += r.alpha;
    }
    state.avg[j] = update_running_average(state.avg[j], state.alloc[j], state.step);
  }
  ++state.step;
  return state;
}

DivisibleSimState initial_divisible_state(const SystemConfig& spec) {
  spec.validate();
  DivisibleSimState s;
  s.spec = spec;
  s.agents.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) s.agents.emplace_back(spec.m, spec.master_seed, i, 0.0);
  s.signal = ControlSignal::divisible(std::vector<bool>(spec.m, false));
  const auto rows = static_cast<Eigen::Index>(spec.n);
  const auto cols = static_cast<Eigen::Index>(spec.m);
  s.events = Matrix::Zero(rows, cols);
  s.responses = Matrix::Zero(rows, cols);
  s.lambda_sum = Matrix::Zero(rows, cols);
  return s;
}

namespace {

TraceRecord make_record(const DivisibleSimState& s, bool with_matrices) {
  TraceRecord rec;
  rec.step = s.step;
  rec.signal = s.signal;
  rec.totals.assign(s.spec.m, 0.0);
  rec.avg_totals.assign(s.spec.m, 0.0);
  for (const auto& a : s.agents)
    for (std::size_t j = 0; j < s.spec.m; ++j) {
      rec.totals[j] += a.alloc[j];
      rec.avg_totals[j] += a.avg[j];
    }
  for (bool b : s.signal.bits) rec.bits_broadcast += b ? 1U : 0U;
  if (with_matrices) {
    rec.alloc = s.allocations();
    rec.avg = s.averages();
  }
  return rec;
}

}  // namespace

DivisibleSimState run_divisible(const SystemConfig& spec, std::span<const PolynomialCost> costs,
                                TraceSink& sink, RunOptions options) {
  DivisibleSimState s = initial_divisible_state(spec);
  if (costs.size() != spec.n) throw ConfigError("run_divisible: need one cost per agent");
  for (const auto& c : costs)
    if (c.dimension() != spec.m) throw ConfigError("run_divisible: cost dimension != m");

  TraceRecord current = make_record(s, true);
  sink.begin(current);
  std::vector<DivisibleObservation> obs(spec.n);

  for (std::uint64_t k = 0; k < spec.horizon; ++k) {
    s.signal = control_unit_step(current.totals, spec);
    detail::for_each_index(spec.n, options.parallel, [&](std::size_t i) {
      s.agents[i] = agent_step(std::move(s.agents[i]), s.signal, costs[i], spec, &obs[i]);
    });
    ++s.step;
    for (std::size_t i = 0; i < spec.n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      for (std::size_t j = 0; j < spec.m; ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        if (!std::isfinite(s.agents[i].alloc[j]) || !std::isfinite(s.agents[i].avg[j])) {
          std::ostringstream os;
          os << "run_divisible: non-finite state for agent " << i << " resource " << j << " at step "
             << s.step;
          throw NumericError(os.str());
        }
        if (!s.signal.bits[j]) continue;
        s.lambda_stats.observe(obs[i].lambda[j]);
        s.events(row, col) += 1.0;
        s.lambda_sum(row, col) += obs[i].lambda[j];
        if (obs[i].responded[j]) s.responses(row, col) += 1.0;
      }
    }
    current = make_record(s, sink.wants_matrices(s.step));
    sink.record(current);
  }
  return s;
}

}  // namespace aimd
