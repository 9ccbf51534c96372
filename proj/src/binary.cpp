#include "aimd/binary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parallel.hpp"

namespace aimd {

namespace {

Matrix to_matrix(const std::vector<AgentState>& agents, std::size_t m, bool use_avg) {
  Matrix out(static_cast<Eigen::Index>(agents.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < agents.size(); ++i)
    for (std::size_t j = 0; j < m; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          use_avg ? agents[i].avg[j] : agents[i].alloc[j];
  return out;
}

}  // namespace

Matrix BinarySimState::allocations() const { return to_matrix(agents, spec.m, false); }
Matrix BinarySimState::averages() const { return to_matrix(agents, spec.m, true); }

double omega_update(double omega_k, double tau, double total_demand, double capacity, double headroom) {
  const double next = omega_k - tau * (total_demand - headroom * capacity);
  if (std::isnan(next)) throw NumericError("omega_update: non-finite normalization factor");
  return std::max(next, kOmegaFloor);
}

double compute_sigma(const PolynomialCost& cost, std::span<const double> avg, std::size_t j, double omega_j,
                     SigmaCase* how) {
  if (j >= avg.size()) throw ConfigError("compute_sigma: resource index out of range");
  const double grad = cost.partial(avg, j);
  if (grad < 0.0 || std::isnan(grad)) {
    std::ostringstream os;
    os << "compute_sigma: grad_" << j << " g = " << grad << " is negative (cost not increasing)";
    throw NumericError(os.str());
  }
  SigmaCase which = SigmaCase::Ratio;
  double sigma = 0.0;
  if (grad == 0.0) {
    if (avg[j] == 0.0) {
      which = SigmaCase::Reseeded;
      sigma = kSigmaReseed;
    } else {
      which = SigmaCase::Clamped;
      sigma = 1.0;
    }
  } else {
    const double ratio = omega_j * avg[j] / grad;
    if (!std::isfinite(ratio) && !(ratio > 1.0)) throw NumericError("compute_sigma: non-finite probability");
    if (ratio >= 1.0) {
      which = ratio > 1.0 ? SigmaCase::Clamped : SigmaCase::Ratio;
      sigma = 1.0;
    } else {
      sigma = ratio;
    }
  }
  if (how != nullptr) *how = which;
  return sigma;
}

AgentState binary_agent_step(AgentState state, std::span<const double> omega, const PolynomialCost& cost,
                             BinaryObservation* obs) {
  const std::size_t m = omega.size();
  if (state.alloc.size() != m || state.avg.size() != m || state.streams.size() != m)
    throw ConfigError("binary_agent_step: agent state has wrong dimension");
  std::vector<double> sigma(m);
  std::vector<SigmaCase> how(m);
  for (std::size_t j = 0; j < m; ++j) sigma[j] = compute_sigma(cost, state.avg, j, omega[j], &how[j]);
  for (std::size_t j = 0; j < m; ++j) {
    state.alloc[j] = bernoulli(state.streams[j], sigma[j]) ? 1.0 : 0.0;
    state.avg[j] = update_running_average(state.avg[j], state.alloc[j], state.step);
  }
  ++state.step;
  if (obs != nullptr) {
    obs->sigma = std::move(sigma);
    obs->how = std::move(how);
  }
  return state;
}

std::vector<double> initial_omega(const SystemConfig& spec, const BinaryInit& init) {
  if (init.tau.size() != spec.m) throw ConfigError("binary: tau must have m entries");
  for (double t : init.tau)
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("binary: tau must be positive");
  if (init.omega0.empty()) {
    std::vector<double> out(spec.m);
    for (std::size_t j = 0; j < spec.m; ++j) out[j] = init.tau[j] * spec.resources[j].capacity * 10.0;
    return out;
  }
  if (init.omega0.size() != spec.m) throw ConfigError("binary: omega0 must have m entries");
  for (double o : init.omega0)
    if (!(o > 0.0) || !std::isfinite(o)) throw ConfigError("binary: omega0 must be positive");
  return init.omega0;
}

BinarySimState initial_binary_state(const SystemConfig& spec, const BinaryInit& init) {
  spec.validate();
  if (init.mu_bits == 0) throw ConfigError("binary: mu_bits must be positive");
  BinarySimState s;
  s.spec = spec;
  s.tau = init.tau;
  s.omega = initial_omega(spec, init);
  s.mu_bits = init.mu_bits;
  s.agents.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) s.agents.emplace_back(spec.m, spec.master_seed, i, 1.0);
  return s;
}

namespace {

TraceRecord make_record(const BinarySimState& s, bool with_matrices) {
  TraceRecord rec;
  rec.step = s.step;
  rec.signal = ControlSignal::binary(s.omega);
  rec.totals.assign(s.spec.m, 0.0);
  rec.avg_totals.assign(s.spec.m, 0.0);
  for (const auto& a : s.agents)
    for (std::size_t j = 0; j < s.spec.m; ++j) {
      rec.totals[j] += a.alloc[j];
      rec.avg_totals[j] += a.avg[j];
    }
  rec.bits_broadcast = static_cast<std::uint64_t>(s.mu_bits) * s.spec.m;
  if (with_matrices) {
    rec.alloc = s.allocations();
    rec.avg = s.averages();
  }
  return rec;
}

}  // namespace

BinarySimState run_binary(const SystemConfig& spec, std::span<const PolynomialCost> costs,
                          const BinaryInit& init, TraceSink& sink, RunOptions options) {
  BinarySimState s = initial_binary_state(spec, init);
  if (costs.size() != spec.n) throw ConfigError("run_binary: need one cost per agent");
  for (const auto& c : costs)
    if (c.dimension() != spec.m) throw ConfigError("run_binary: cost dimension != m");

  TraceRecord current = make_record(s, true);
  sink.begin(current);
  std::vector<BinaryObservation> obs(spec.n);

  for (std::uint64_t k = 0; k < spec.horizon; ++k) {
    for (std::size_t j = 0; j < spec.m; ++j) {
      const ResourceSpec& r = spec.resources[j];
      const double raw = s.omega[j] - s.tau[j] * (current.totals[j] - r.headroom * r.capacity);
      s.omega[j] = omega_update(s.omega[j], s.tau[j], current.totals[j], r.capacity, r.headroom);
      if (raw < kOmegaFloor) ++s.omega_floor_hits;
    }
    detail::for_each_index(spec.n, options.parallel, [&](std::size_t i) {
      s.agents[i] = binary_agent_step(std::move(s.agents[i]), s.omega, costs[i], &obs[i]);
    });
    ++s.step;
    std::vector<double> expected(spec.m, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
      for (std::size_t j = 0; j < spec.m; ++j) {
        const double sigma = obs[i].sigma[j];
        if (!(sigma >= 0.0 && sigma <= 1.0)) throw NumericError("run_binary: sigma outside [0, 1]");
        s.sigma_stats.observe(sigma);
        if (obs[i].how[j] == SigmaCase::Clamped) ++s.sigma_stats.clamped;
        if (obs[i].how[j] == SigmaCase::Reseeded) ++s.sigma_stats.reseeded;
        expected[j] += sigma;
      }
    }
    current = make_record(s, sink.wants_matrices(s.step));
    current.expected_totals = std::move(expected);
    sink.record(current);
  }
  return s;
}

}  // namespace aimd
