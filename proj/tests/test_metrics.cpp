#include <doctest.h>

#include <random>
#include <sstream>

#include "aimd/divisible.hpp"
#include "aimd/metrics.hpp"

using namespace aimd;

namespace {

TraceRecord divisible_record(std::uint64_t step, std::vector<double> totals, std::vector<bool> bits) {
  TraceRecord r;
  r.step = step;
  r.totals = totals;
  r.avg_totals = totals;
  r.signal = ControlSignal::divisible(bits);
  for (bool b : bits) r.bits_broadcast += b ? 1 : 0;
  return r;
}

}  // namespace

TEST_CASE("convergence and relative error") {
  Matrix x(2, 2);
  x << 1.0, 2.0, 0.0, 4.0;
  CHECK(convergence_error(x, x).isZero());
  const Matrix off = x.array() + 0.1;
  CHECK((convergence_error(off, x).array() - 0.1).abs().maxCoeff() < 1e-15);
  const Matrix rel = relative_error(off, x, 1e-3);
  CHECK(rel(1, 0) == doctest::Approx(0.1 / 1e-3));
  CHECK(rel(0, 1) == doctest::Approx(0.05));
}

TEST_CASE("gradient spread examples") {
  const std::vector<PolynomialCost> same(4, PolynomialCost::monomial(1, 1.0, 2, 0));
  Matrix avg = Matrix::Constant(4, 1, 0.7);
  const auto s = gradient_spread(avg, same);
  CHECK(s[0].stddev == doctest::Approx(0.0));
  CHECK(s[0].cv() == doctest::Approx(0.0));

  // f = x^2 has gradient 2x: x = 1 and 2 give 2 and 4.
  const std::vector<PolynomialCost> two(2, PolynomialCost::monomial(1, 1.0, 2, 0));
  Matrix a(2, 1);
  a << 1.0, 2.0;
  const auto t = gradient_spread(a, two);
  CHECK(t[0].mean == doctest::Approx(3.0));
  CHECK(t[0].stddev == doctest::Approx(1.0));
  CHECK(t[0].cv() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("cost ratio and capacity tracking") {
  const std::vector<PolynomialCost> costs{PolynomialCost::monomial(1, 0.5, 2, 0), PolynomialCost::monomial(1, 1.0, 2, 0)};
  Matrix opt(2, 1);
  opt << 2.0, 1.0;
  CHECK(cost_ratio(opt, opt, costs) == doctest::Approx(1.0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    Matrix f(2, 1);
    f(0, 0) = u(rng);
    f(1, 0) = 3.0 - f(0, 0);
    CHECK(cost_ratio(f, opt, costs) >= 1.0 - 1e-12);
  }
  CHECK_THROWS_AS(cost_ratio(opt, Matrix::Zero(2, 1), costs), NumericError);

  SystemConfig s;
  s.n = 2;
  s.m = 2;
  s.resources = {ResourceSpec{15, 0.01, 0.85, 0.5, 1.0}, ResourceSpec{20, 0.01, 0.8, 0.5, 1.0}};
  const auto err = capacity_tracking(std::vector<double>{15.3, 19.0}, s);
  CHECK(err[0] == doctest::Approx(0.02));
  CHECK(err[1] == doctest::Approx(0.05));
}

TEST_CASE("recorder keeps strided, window and extra snapshots") {
  TraceRecorder rec(RecorderOptions{10, 3, 50, {7}});
  CHECK(rec.wants_matrices(0));
  CHECK(rec.wants_matrices(10));
  CHECK(rec.wants_matrices(7));
  CHECK_FALSE(rec.wants_matrices(11));
  CHECK(rec.wants_matrices(48));
  CHECK(rec.wants_matrices(50));
  CHECK_FALSE(rec.wants_matrices(47));
  CHECK_THROWS_AS(TraceRecorder(RecorderOptions{0, 3, 50, {}}), ConfigError);

  SystemConfig spec;
  spec.n = 3;
  spec.m = 1;
  spec.horizon = 50;
  spec.resources = {ResourceSpec{0.2, 0.01, 0.5, 0.5, 1.0}};
  const std::vector<PolynomialCost> costs(3, PolynomialCost::monomial(1, 0.5, 2, 0));
  (void)run_divisible(spec, costs, rec);
  CHECK(rec.series().size() == 50);
  CHECK(rec.snapshot_at(7) != nullptr);
  CHECK(rec.snapshot_at(11) == nullptr);
  CHECK(rec.snapshot_at(0) == &rec.initial());
  CHECK(rec.last_snapshot()->step == 50);
  CHECK(verify_divisible_signals(rec, spec).ok());
  CHECK(verify_snapshot_totals(rec).ok());
}

TEST_CASE("replay checks catch tampered traces") {
  SystemConfig spec;
  spec.n = 1;
  spec.m = 1;
  spec.resources = {ResourceSpec{1.0, 0.01, 0.5, 0.5, 1.0}};
  TraceRecorder rec(RecorderOptions{1, 0, 2, {}});
  rec.begin(divisible_record(0, {0.0}, {false}));
  rec.record(divisible_record(1, {2.0}, {false}));
  rec.record(divisible_record(2, {1.5}, {false}));  // should be S = 1 after a total of 2 > C
  const auto r = verify_divisible_signals(rec, spec);
  CHECK_FALSE(r.ok());
  CHECK(r.mismatches == 1);

  TraceRecord bad = divisible_record(3, {1.0}, {false});
  bad.alloc = Matrix::Constant(1, 1, 0.5);  // does not sum to the recorded total
  bad.avg = Matrix::Constant(1, 1, 1.0);
  rec.record(bad);
  CHECK_FALSE(verify_snapshot_totals(rec).ok());

  TraceRecord nan = divisible_record(4, {std::nan("")}, {false});
  rec.record(nan);
  CHECK_FALSE(verify_finite(rec).ok());
}

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(i % 40) - 20);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(15.0) == "15");
}

TEST_CASE("CSV quoting and parsing") {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"a", "b,c", "say \"hi\"", "line\nbreak"});
  w.row({"1", "", "3", "4"});
  CHECK(os.str() == "a,\"b,c\",\"say \"\"hi\"\"\",\"line\nbreak\"\n1,,3,4\n");
  std::istringstream in(os.str());
  const auto t = parse_csv(in);
  CHECK(t.header == std::vector<std::string>{"a", "b,c", "say \"hi\"", "line\nbreak"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0] == std::vector<std::string>{"1", "", "3", "4"});
  CHECK(t.column("b,c") == 1);
  CHECK_THROWS_AS(t.column("zzz"), ConfigError);
  std::istringstream broken("a,\"b\n");
  CHECK_THROWS_AS(parse_csv(broken), ConfigError);
  CHECK_THROWS_AS(read_csv_file("/nonexistent/file.csv"), Error);
}
