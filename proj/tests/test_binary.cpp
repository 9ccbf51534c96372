#include <doctest.h>

#include "aimd/binary.hpp"
#include "aimd/harness.hpp"
#include "aimd/metrics.hpp"

using namespace aimd;

namespace {

SystemConfig unit_system(std::size_t n, double capacity) {
  SystemConfig s;
  s.n = n;
  s.m = 1;
  s.delta = 1.0;
  s.resources = {ResourceSpec{capacity, 1.0, 0.5, 1.0, 1.0}};
  return s;
}

ExperimentDef short_binary(std::uint64_t horizon) {
  auto def = experiment_binary_paper();
  def.system.horizon = horizon;
  return def;
}

}  // namespace

TEST_CASE("omega update examples") {
  CHECK(omega_update(0.35, 0.0002275, 450, 450, 1.0) == 0.35);
  CHECK(omega_update(0.350, 0.0002275, 460, 450, 1.0) == doctest::Approx(0.347725).epsilon(1e-14));
  CHECK(omega_update(0.35, 0.0002275, 440, 450, 1.0) > 0.35);
  CHECK(omega_update(0.35, 0.0002275, 405, 450, 0.9) == 0.35);
  CHECK(omega_update(1e-6, 1.0, 1e6, 1.0, 1.0) == kOmegaFloor);
}

TEST_CASE("compute_sigma examples") {
  const auto sq = PolynomialCost::monomial(1, 1.0, 2, 0);
  SigmaCase how{};
  CHECK(compute_sigma(sq, std::vector<double>{0.5}, 0, 0.35, &how) == doctest::Approx(0.175).epsilon(1e-15));
  CHECK(how == SigmaCase::Ratio);
  CHECK(compute_sigma(sq, std::vector<double>{0.5}, 0, 10.0, &how) == 1.0);
  CHECK(how == SigmaCase::Clamped);
  const auto inc = PolynomialCost::monomial(1, 1.0, 2, 0) + PolynomialCost::monomial(1, 1.0, 1, 0);
  CHECK(compute_sigma(inc, std::vector<double>{0.0}, 0, 0.35, &how) == 0.0);
  CHECK(how == SigmaCase::Ratio);
  CHECK(compute_sigma(sq, std::vector<double>{0.0}, 0, 0.35, &how) == kSigmaReseed);
  CHECK(how == SigmaCase::Reseeded);
}

TEST_CASE("binary agent step: deterministic probabilities") {
  const auto sq = PolynomialCost::monomial(1, 1.0, 2, 0);
  AgentState a(1, 1, 0, 1.0);
  for (int k = 0; k < 100; ++k) {
    a = binary_agent_step(a, std::vector<double>{100.0}, sq);
    CHECK(a.alloc[0] == 1.0);
  }
  const auto inc = PolynomialCost::monomial(1, 1.0, 2, 0) + PolynomialCost::monomial(1, 1.0, 1, 0);
  AgentState z(1, 1, 0, 0.0);
  for (int k = 0; k < 100; ++k) {
    z = binary_agent_step(z, std::vector<double>{0.35}, inc);
    CHECK(z.alloc[0] == 0.0);
  }
}

TEST_CASE("binary agent step: running mean tracks a held probability") {
  // g = y^2/2 has grad g = y, so sigma = omega for every y > 0.
  const auto half_sq = PolynomialCost::monomial(1, 0.5, 2, 0);
  AgentState a(1, 99, 4, 1.0);
  BinaryObservation obs;
  for (int k = 0; k < 100000; ++k) {
    a = binary_agent_step(a, std::vector<double>{0.389}, half_sq, &obs);
    REQUIRE(obs.sigma[0] == doctest::Approx(0.389));
    REQUIRE((a.alloc[0] == 0.0 || a.alloc[0] == 1.0));
  }
  CHECK(std::abs(a.avg[0] - 0.389) < 0.01);
}

TEST_CASE("run_binary horizon 0 keeps the initial state") {
  const auto spec = unit_system(3, 2.0);
  const std::vector<PolynomialCost> costs(3, PolynomialCost::monomial(1, 1.0, 2, 0));
  NullSink sink;
  const auto s = run_binary(spec, costs, BinaryInit{{0.1}, {0.01}, 32}, sink);
  CHECK(s.step == 0);
  for (const auto& a : s.agents) {
    CHECK(a.alloc[0] == 1.0);
    CHECK(a.avg[0] == 1.0);
  }
  CHECK(s.omega == std::vector<double>{0.1});
}

TEST_CASE("single agent with one unit converges to always demanding it") {
  auto spec = unit_system(1, 1.0);
  spec.horizon = 20000;  // Omega needs ~400 idle steps to reach sigma = 1
  const std::vector<PolynomialCost> costs{PolynomialCost::monomial(1, 1.0, 2, 0) +
                                          PolynomialCost::monomial(1, 0.5, 4, 0)};
  TraceRecorder rec(RecorderOptions{100, 0, spec.horizon, {}});
  const auto s = run_binary(spec, costs, BinaryInit{{0.05}, {0.01}, 32}, rec);
  CHECK(s.agents[0].avg[0] > 0.95);
  // Demand never exceeds the single unit, so Omega never decreases.
  double prev = 0.05;
  for (const auto& row : rec.series()) {
    CHECK(row.signal.omega[0] >= prev);
    prev = row.signal.omega[0];
  }
}

TEST_CASE("canned run: ranges, bit accounting and Omega telescoping") {
  const auto def = short_binary(3000);
  const auto costs = build_costs(def);
  TraceRecorder rec(RecorderOptions{250, 5, def.system.horizon, {}});
  const auto s = run_binary(def.system, costs, def.binary, rec);
  for (const auto& snap : rec.snapshots()) {
    CHECK(((snap.alloc.array() == 0.0) || (snap.alloc.array() == 1.0)).all());
    CHECK(snap.avg.minCoeff() >= 0.0);
    CHECK(snap.avg.maxCoeff() <= 1.0);
  }
  CHECK(s.sigma_stats.min >= 0.0);
  CHECK(s.sigma_stats.max <= 1.0);
  CHECK(s.sigma_stats.evaluations == def.system.n * def.system.m * def.system.horizon);
  CHECK(verify_binary_bits(rec, def.system.m, 32).ok());
  CHECK(s.omega_floor_hits == 0);
  const auto tele = verify_omega_telescoping(rec, def.system, def.binary.tau, def.binary.omega0, 1e-6);
  CHECK(tele.ok());
  CHECK(tele.max_error < 1e-6);
  CHECK(verify_snapshot_totals(rec).ok());
}

TEST_CASE("expected-demand consistency over a 1000-step window") {
  const auto def = short_binary(3000);
  const auto costs = build_costs(def);
  TraceRecorder rec(RecorderOptions{1000, 0, def.system.horizon, {}});
  (void)run_binary(def.system, costs, def.binary, rec);
  const auto& series = rec.series();
  const double n = static_cast<double>(def.system.n);
  for (std::size_t j = 0; j < def.system.m; ++j) {
    double diff = 0.0, var = 0.0;
    for (std::size_t k = series.size() - 1000; k < series.size(); ++k) {
      const double e = series[k].expected_totals[j];
      diff += series[k].totals[j] - e;
      var += e * (1.0 - e / n);  // bounds sum sigma (1 - sigma) for a given sum
    }
    CHECK(std::abs(diff) < 3.0 * std::sqrt(var));
  }
}

TEST_CASE("stationarity: demand at a fixed Omega equals the sum of sigma") {
  const std::vector<PolynomialCost> costs{PolynomialCost::monomial(1, 1.0, 2, 0),
                                          PolynomialCost::monomial(1, 0.5, 4, 0) + PolynomialCost::monomial(1, 1.0, 2, 0),
                                          PolynomialCost::monomial(1, 2.0, 3, 0)};
  const std::vector<double> y{0.3, 0.6, 0.45};
  const double omega = 0.4;
  double capacity = 0.0, var = 0.0;
  std::vector<double> sigma;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    sigma.push_back(compute_sigma(costs[i], std::vector<double>{y[i]}, 0, omega));
    REQUIRE(sigma.back() > 0.0);
    REQUIRE(sigma.back() < 1.0);
    capacity += sigma.back();
    var += sigma.back() * (1 - sigma.back());
  }
  CHECK(omega_update(omega, 0.01, capacity, capacity, 1.0) == omega);
  std::vector<RandomStream> streams;
  for (std::size_t i = 0; i < costs.size(); ++i) streams.push_back(spawn_agent_stream(5, i, 0));
  const int draws = 20000;
  double total = 0.0;
  for (int k = 0; k < draws; ++k)
    for (std::size_t i = 0; i < costs.size(); ++i) total += bernoulli(streams[i], sigma[i]) ? 1.0 : 0.0;
  CHECK(std::abs(total / draws - capacity) < 3.0 * std::sqrt(var / draws));
}

TEST_CASE("binary parallel stepping and stream separation") {
  const auto def = short_binary(500);
  auto costs = build_costs(def);
  NullSink sink;
  const auto seq = run_binary(def.system, costs, def.binary, sink, RunOptions{false});
  const auto par = run_binary(def.system, costs, def.binary, sink, RunOptions{true});
  CHECK(seq.averages() == par.averages());
  CHECK(seq.omega == par.omega);

  costs[0] = PolynomialCost::power_of_sum(2, 3.0, 2, {0, 1});
  const auto changed = run_binary(def.system, costs, def.binary, sink);
  for (std::size_t i = 1; i < seq.agents.size(); ++i) CHECK(seq.agents[i].streams == changed.agents[i].streams);
}

TEST_CASE("binary init validation") {
  const auto spec = unit_system(2, 1.0);
  CHECK_THROWS_AS(initial_binary_state(spec, BinaryInit{{0.1}, {}, 32}), ConfigError);
  CHECK_THROWS_AS(initial_binary_state(spec, BinaryInit{{-0.1}, {0.01}, 32}), ConfigError);
  CHECK_THROWS_AS(initial_binary_state(spec, BinaryInit{{0.1}, {0.01}, 0}), ConfigError);
  CHECK(initial_omega(spec, BinaryInit{{}, {0.01}, 32}) == std::vector<double>{0.01 * 1.0 * 10.0});
}
