#include <doctest.h>

#include <random>

#include "aimd/cost.hpp"
#include "aimd/harness.hpp"
#include "oracles.hpp"

using namespace aimd;

namespace {

// a/2 (x1^2 + x2^2) + b/4 (x1^4 + x2^4)
PolynomialCost family(double a, double b) {
  return PolynomialCost(2, {{a / 2, {2, 0}}, {a / 2, {0, 2}}, {b / 4, {4, 0}}, {b / 4, {0, 4}}});
}

PolynomialCost binary_class(int c) {
  const std::vector<std::size_t> both{0, 1};
  switch (c) {
    case 1: return PolynomialCost::power_of_sum(2, 0.5, 2, both) + PolynomialCost::power_of_sum(2, 1.0 / 8, 4, both);
    case 2: return PolynomialCost::power_of_sum(2, 0.25, 4, both) + PolynomialCost::power_of_sum(2, 1.0 / 12, 6, both);
    default: return PolynomialCost::power_of_sum(2, 1.0 / 6, 6, both) + PolynomialCost::power_of_sum(2, 1.0 / 16, 8, both);
  }
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("evaluate examples") {
  const auto f = family(1, 1);
  const std::vector<double> one{1, 1}, zero{0, 0};
  CHECK(f.evaluate(one) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(f.evaluate(zero) == 0.0);
  CHECK(binary_class(1).evaluate(std::vector<double>{0.4, 0.6}) == doctest::Approx(0.625).epsilon(1e-14));
  CHECK(binary_class(2).evaluate(std::vector<double>{0.0, 0.0}) == 0.0);
}

TEST_CASE("gradient examples") {
  const auto f = family(1, 1);
  const auto g = f.gradient(std::vector<double>{1, 1});
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(2.0));
  CHECK(f.gradient(std::vector<double>{0, 0}) == std::vector<double>{0, 0});

  const auto h = family(3, 2);
  const std::vector<double> x{0.5, 0.25};
  const auto gh = h.gradient(x);
  CHECK(gh[0] == doctest::Approx(1.75).epsilon(1e-14));
  CHECK(gh[1] == doctest::Approx(0.78125).epsilon(1e-14));
  const auto fd = oracle::central_difference([&](const std::vector<double>& p) { return h.evaluate(p); }, x);
  CHECK(rel(gh[0], fd[0]) < 1e-6);
  CHECK(rel(gh[1], fd[1]) < 1e-6);
}

TEST_CASE("gradient and Hessian agree with central differences") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<PolynomialCost> costs{family(1, 1), family(25, 10), family(7, 3), binary_class(1), binary_class(2),
                                    binary_class(3)};
  costs.push_back(PolynomialCost(2, {{2.0, {1, 1}}, {0.5, {3, 0}}, {1.5, {0, 2}}, {0.3, {2, 2}}}));
  double worst_grad = 0.0, worst_hess = 0.0;
  for (const auto& f : costs) {
    for (int p = 0; p < 100; ++p) {
      const std::vector<double> x{u(rng), u(rng)};
      const auto g = f.gradient(x);
      const auto fd = oracle::central_difference([&](const std::vector<double>& q) { return f.evaluate(q); }, x, 1e-6);
      for (std::size_t j = 0; j < 2; ++j) {
        worst_grad = std::max(worst_grad, rel(g[j], fd[j]));
        CHECK(f.partial(x, j) == g[j]);
      }
      const auto H = f.hessian(x);
      for (std::size_t j = 0; j < 2; ++j) {
        const auto col = oracle::central_difference(
            [&](const std::vector<double>& q) { return f.partial(q, j); }, x, 1e-6);
        for (std::size_t l = 0; l < 2; ++l)
          worst_hess = std::max(worst_hess, std::abs(H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) - col[l]) /
                                                std::max(1.0, std::abs(col[l])));
      }
    }
  }
  CHECK(worst_grad < 1e-5);
  CHECK(worst_hess < 1e-5);
}

TEST_CASE("power_of_sum expands the multinomial exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto f = PolynomialCost::power_of_sum(3, 0.7, 5, {0, 2});
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{u(rng), u(rng), u(rng)};
    CHECK(f.evaluate(x) == doctest::Approx(0.7 * std::pow(x[0] + x[2], 5)).epsilon(1e-12));
  }
  CHECK(f.terms().size() == 6);
  CHECK_THROWS_AS(PolynomialCost::power_of_sum(2, 1.0, 2, {}), ConfigError);
  CHECK_THROWS_AS(PolynomialCost::power_of_sum(2, 1.0, 2, {2}), ConfigError);
}

TEST_CASE("cost construction validates and canonicalizes") {
  CHECK_THROWS_AS(PolynomialCost(2, {{-1.0, {2, 0}}}), ConfigError);
  CHECK_THROWS_AS(PolynomialCost(2, {{1.0, {2}}}), ConfigError);
  const PolynomialCost a(1, {{1.0, {2}}, {2.0, {2}}});
  const PolynomialCost b(1, {{3.0, {2}}});
  CHECK(a == b);
  CHECK(PolynomialCost::monomial(1, 1.0, 2, 0) + PolynomialCost::monomial(1, 2.0, 2, 0) == b);
  CHECK_FALSE(b.to_string().empty());
}

TEST_CASE("box grid is cell-centred") {
  const auto box = DomainBox::uniform(2, 0.0 + 1.0, 3.0, 4);
  CHECK(box.grid_size() == 16);
  double lo = 10, hi = -10;
  std::size_t count = 0;
  box.for_each_point([&](std::span<const double> x) {
    lo = std::min(lo, x[0]);
    hi = std::max(hi, x[0]);
    ++count;
  });
  CHECK(count == 16);
  CHECK(lo == doctest::Approx(1.25));
  CHECK(hi == doctest::Approx(2.75));
  DomainBox bad = box;
  bad.upper[0] = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("F_delta check examples") {
  const double delta = 1.0 / 35;
  const auto f = family(25, 10);
  const auto pass = check_f_delta(f, delta, DomainBox::uniform(2, 0.01, 1.0));
  CHECK(pass.pass);
  CHECK(pass.worst_margin > 0.0);

  const auto fail = check_f_delta(f, delta, DomainBox::uniform(2, 0.01, 2.0));
  CHECK_FALSE(fail.pass);
  // Oracle: (1/35)(25x + 10x^3) < x iff x < 1, so the worst point sits near 2.
  CHECK(*std::max_element(fail.worst_point.begin(), fail.worst_point.end()) > 1.9);

  const auto linear = PolynomialCost(2, {{3.0, {1, 0}}});
  const auto lin = check_f_delta(linear, delta, DomainBox::uniform(2, 0.01, 1.0));
  CHECK_FALSE(lin.pass);
  CHECK(lin.min_hessian_eigenvalue >= -kHessianTolerance);

  const auto saddle = PolynomialCost(2, {{1.0, {1, 1}}, {1.0, {2, 0}}, {1.0, {0, 2}}, {3.0, {1, 1}}});
  const auto sad = check_f_delta(saddle, 0.01, DomainBox::uniform(2, 0.01, 1.0));
  CHECK_FALSE(sad.pass);
  CHECK(sad.min_hessian_eigenvalue < 0.0);
}

TEST_CASE("F_delta verdicts agree with a direct grid oracle") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ua(1, 25), ub(1, 10), ud(0.005, 0.08), uh(0.5, 2.0);
  for (int t = 0; t < 40; ++t) {
    const double a = ua(rng), b = ub(rng), delta = ud(rng), hi = uh(rng);
    const auto box = DomainBox::uniform(2, 0.01, hi, 32);
    // Separable family: the condition is delta (a x + b x^3) < x on each axis.
    bool ok = true;
    for (std::size_t g = 0; g < 32; ++g) {
      const double x = 0.01 + (hi - 0.01) * (g + 0.5) / 32.0;
      ok = ok && delta * (a * x + b * x * x * x) < x;
    }
    CHECK(check_f_delta(family(a, b), delta, box).pass == ok);
  }
}

TEST_CASE("derive_gamma examples") {
  const auto sq = PolynomialCost::monomial(1, 1.0, 2, 0);
  const std::vector<PolynomialCost> one{sq};
  CHECK(derive_gamma(one, 0, DomainBox::uniform(1, 0.5, 1.0), 1.0) == doctest::Approx(0.5).epsilon(1e-12));

  // f = 1.25 x^2 -> x/f' = 0.4; f = 2.5 x^2 -> 0.2.
  const std::vector<PolynomialCost> two{PolynomialCost::monomial(1, 1.25, 2, 0), PolynomialCost::monomial(1, 2.5, 2, 0)};
  CHECK(derive_gamma(two, 0, DomainBox::uniform(1, 0.5, 1.0), 1.0) == doctest::Approx(0.2).epsilon(1e-12));

  const auto def = experiment_divisible_paper();
  const auto costs = build_costs(def);
  for (std::size_t j = 0; j < 2; ++j) CHECK(derive_gamma(costs, j, def.box, 1.0 / 35) == 1.0 / 35);
}

TEST_CASE("derive_gamma is monotone in family, box and margin") {
  const auto def = experiment_divisible_paper();
  auto costs = build_costs(def);
  const auto box = DomainBox::uniform(2, 0.01, 1.0, 32);
  const double g_all = derive_gamma(costs, 0, box, 1.0);
  const std::vector<PolynomialCost> half(costs.begin(), costs.begin() + 30);
  CHECK(derive_gamma(half, 0, box, 1.0) >= g_all);
  CHECK(derive_gamma(costs, 0, DomainBox::uniform(2, 0.01, 1.5, 32), 1.0) <= g_all);
  CHECK(derive_gamma(costs, 0, box, 1.0, 0.9) == doctest::Approx(0.9 * g_all));
  CHECK(derive_gamma(costs, 0, box, 1e-6) == 1e-6);
  CHECK_THROWS_AS(derive_gamma(costs, 0, box, 1.0, 1.5), ConfigError);
  const std::vector<PolynomialCost> flat{PolynomialCost(2, {{1.0, {0, 2}}})};
  CHECK_THROWS_AS(derive_gamma(flat, 0, box, 1.0), NumericError);
}

TEST_CASE("derive_tau examples") {
  const auto sq = PolynomialCost::monomial(1, 1.0, 2, 0);
  const std::vector<PolynomialCost> one{sq};
  CHECK(derive_tau(one, 0, DomainBox::uniform(1, 0.5, 1.0)) == doctest::Approx(2.0).epsilon(1e-12));

  // n identical agents each with ratio <= r = 0.5.
  const std::vector<PolynomialCost> ten(10, sq);
  CHECK(derive_tau(ten, 0, DomainBox::uniform(1, 0.5, 1.0)) >= 1.0 / (10 * 0.5) - 1e-12);

  // Unit-demand experiment on the operating box [0.2, 1]^2: order 2e-4.
  const auto def = experiment_binary_paper();
  const auto costs = build_costs(def);
  const auto box = DomainBox::uniform(2, 0.2, 1.0, 32);
  for (std::size_t j = 0; j < 2; ++j) {
    const double tau = derive_tau(costs, j, box);
    CHECK(tau > 1e-4);
    CHECK(tau < 1e-3);
  }
  const std::vector<PolynomialCost> flat{PolynomialCost(2, {{1.0, {0, 2}}})};
  CHECK_THROWS_AS(derive_tau(flat, 0, box), NumericError);
}

TEST_CASE("increasing-convex check") {
  const auto box = DomainBox::uniform(2, 0.01, 1.0, 16);
  for (int c = 1; c <= 3; ++c) CHECK(check_increasing_convex(binary_class(c), box).pass);
  CHECK_FALSE(check_increasing_convex(PolynomialCost(2, {{1.0, {0, 2}}}), box).pass);
  CHECK_FALSE(check_increasing_convex(PolynomialCost(2, {{1.0, {1, 1}}}), box).pass);
}
