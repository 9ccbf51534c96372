#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "aimd/config.hpp"
#include "aimd/solver.hpp"

namespace aimd::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string col(const std::string& prefix, std::size_t j) { return prefix + "_r" + std::to_string(j); }

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError("csv: not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("csv: not an integer: '" + s + "'");
  return v;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void write_matrix_rows(CsvWriter& w, std::uint64_t step, const Matrix& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<std::string> row{fmt(step), std::to_string(i)};
    for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(fmt(x(i, j)));
    w.row(row);
  }
}

std::vector<std::string> matrix_header(const std::string& prefix, std::size_t m) {
  std::vector<std::string> h{"step", "agent"};
  for (std::size_t j = 0; j < m; ++j) h.push_back(col(prefix, j));
  return h;
}

std::vector<const TraceRecord*> all_snapshots(const TraceRecorder& trace) {
  std::vector<const TraceRecord*> out{&trace.initial()};
  for (const auto& rec : trace.snapshots()) out.push_back(&rec);
  return out;
}

/// Mean of the totals over the last `window` recorded steps, if there are that many.
std::optional<std::vector<double>> tail_mean(const std::vector<std::vector<double>>& totals, std::size_t m,
                                             std::uint64_t window) {
  if (totals.size() < window || window == 0) return std::nullopt;
  std::vector<double> mean(m, 0.0);
  for (std::size_t k = totals.size() - window; k < totals.size(); ++k)
    for (std::size_t j = 0; j < m; ++j) mean[j] += totals[k][j];
  for (double& v : mean) v /= static_cast<double>(window);
  return mean;
}

SolverResult solve_oracle(const ExperimentDef& def, const std::vector<PolynomialCost>& costs, double tol,
                          std::uint64_t max_iters) {
  return solve(program_for(def, costs), tol > 0.0 ? tol : def.oracle_tol, max_iters);
}

ExperimentDef load_def(const std::string& experiment, const std::string& config_path) {
  if (experiment.empty() == config_path.empty())
    throw UsageError("give exactly one of --experiment or --config");
  return experiment.empty() ? load_experiment(config_path) : find_experiment(experiment);
}

}  // namespace

void RunManifest::validate() const {
  if (experiment.empty() == config_path.empty()) throw UsageError("give exactly one of --experiment or --config");
  if (stride == 0) throw UsageError("--stride must be >= 1");
}

ExperimentDef resolve_experiment(const RunManifest& manifest) {
  ExperimentDef def = load_def(manifest.experiment, manifest.config_path);
  if (manifest.seed) {
    def = with_seed(std::move(def), *manifest.seed);
  } else if (!def.seeds.empty()) {
    def = with_seed(std::move(def), def.seeds.front());
  }
  if (manifest.horizon) def.system.horizon = *manifest.horizon;
  return def;
}

fs::path resolve_out_dir(const RunManifest& manifest, const ExperimentDef& def) {
  if (!manifest.out_dir.empty()) return manifest.out_dir;
  const char* root = std::getenv(kOutputRootEnv);
  const fs::path base = (root != nullptr && *root != '\0') ? fs::path(root) : fs::path("runs");
  return base / (def.name + "-seed" + std::to_string(def.system.master_seed));
}

RunResult execute(const ExperimentDef& def, std::uint64_t stride, std::uint64_t window, bool parallel) {
  validate_experiment(def);
  RunResult run{def, build_costs(def),
                TraceRecorder(RecorderOptions{stride, window, def.system.horizon, {criteria::kEarlyStep}}), {}, 0, {},
                {}, {}};
  const RunOptions options{parallel};
  if (def.mode == Mode::Divisible) {
    const auto state = run_divisible(def.system, run.costs, run.trace, options);
    run.probability = state.lambda_stats;
  } else {
    run.tau = def.binary.tau;
    run.omega0 = initial_omega(def.system, def.binary);
    const auto state = run_binary(def.system, run.costs, def.binary, run.trace, options);
    run.probability = state.sigma_stats;
    run.omega_floor_hits = state.omega_floor_hits;
    run.final_omega = state.omega;
  }
  const auto finite = verify_finite(run.trace);
  if (!finite.ok()) throw NumericError("run produced non-finite values: " + finite.first_mismatch);
  return run;
}

std::vector<std::pair<std::string, std::string>> summarize(const RunResult& run, const SolverResult* oracle) {
  const ExperimentDef& def = run.def;
  const std::size_t m = def.system.m;
  const std::uint64_t horizon = def.system.horizon;
  const bool enough = horizon > 0 && !run.trace.series().empty();
  const std::string na = "NA";
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](std::string k, std::string v) { out.emplace_back(std::move(k), std::move(v)); };

  add("experiment", def.name);
  add("mode", to_string(def.mode));
  add("seed", fmt(def.system.master_seed));
  add("n", std::to_string(def.system.n));
  add("m", std::to_string(m));
  add("horizon", fmt(horizon));
  add("steps", fmt(static_cast<std::uint64_t>(run.trace.series().size())));
  add("status", enough ? "ok" : "insufficient_data");

  const TraceRecord* last = run.trace.last_snapshot();
  const auto spread = gradient_spread(*last, run.costs);
  const auto cap = capacity_tracking(last->avg_totals, def.system);
  const TraceRecord* early = run.trace.snapshot_at(criteria::kEarlyStep);
  const auto early_spread = early != nullptr ? gradient_spread(*early, run.costs) : std::vector<Spread>{};
  for (std::size_t j = 0; j < m; ++j) {
    add(col("final_avg_total", j), enough ? fmt(last->avg_totals[j]) : na);
    add(col("capacity_rel_error", j), enough ? fmt(cap[j]) : na);
    add(col("final_grad_mean", j), enough ? fmt(spread[j].mean) : na);
    add(col("final_grad_std", j), enough ? fmt(spread[j].stddev) : na);
    add(col("final_grad_cv", j), enough ? fmt(spread[j].cv()) : na);
    add(col("early_grad_std", j), early != nullptr ? fmt(early_spread[j].stddev) : na);
    add(col("early_grad_cv", j), early != nullptr ? fmt(early_spread[j].cv()) : na);
  }

  const ProbabilityStats& p = run.probability;
  const std::string pname = def.mode == Mode::Divisible ? "lambda" : "sigma";
  add(pname + "_evaluations", fmt(p.evaluations));
  add(pname + "_min", p.evaluations ? fmt(p.min) : na);
  add(pname + "_max", p.evaluations ? fmt(p.max) : na);
  std::uint64_t max_bits = 0;
  for (const auto& row : run.trace.series()) max_bits = std::max(max_bits, row.bits_broadcast);
  add("max_bits_per_step", enough ? fmt(max_bits) : na);

  if (def.mode == Mode::Binary) {
    add("sigma_clamped", fmt(p.clamped));
    add("sigma_reseeded", fmt(p.reseeded));
    add("omega_floor_hits", fmt(run.omega_floor_hits));
    std::vector<std::vector<double>> totals;
    for (const auto& row : run.trace.series()) totals.push_back(row.totals);
    const auto tail = tail_mean(totals, m, criteria::kBinaryTailWindow);
    for (std::size_t j = 0; j < m; ++j) {
      add(col("final_omega", j), fmt(run.final_omega[j]));
      add(col("tail_mean_total", j), tail ? fmt((*tail)[j]) : na);
    }
    if (enough) {
      const auto tele = verify_omega_telescoping(run.trace, def.system, run.tau, run.omega0);
      add("omega_telescoping_max_rel_error", fmt(tele.max_error));
    } else {
      add("omega_telescoping_max_rel_error", na);
    }
  }

  if (oracle != nullptr) {
    add("oracle_converged", oracle->converged ? "1" : "0");
    add("oracle_kkt_residual", fmt(oracle->kkt_residual));
    add("oracle_objective", fmt(oracle->objective));
    if (enough && def.mode == Mode::Divisible) {
      const Matrix rel = relative_error(last->avg, oracle->solution, criteria::kRelErrorFloor);
      add("mean_rel_error", fmt(rel.mean()));
      add("frac_rel_error_below_0.05", fmt((rel.array() < criteria::kPairRelErrorMax).cast<double>().mean()));
      add("max_abs_error", fmt(convergence_error(last->avg, oracle->solution).maxCoeff()));
    }
    add("cost_ratio", enough ? fmt(cost_ratio(last->avg, oracle->solution, run.costs)) : na);
  }
  return out;
}

void write_run(const RunResult& run, const fs::path& dir, const SolverResult* oracle) {
  const ExperimentDef& def = run.def;
  const std::size_t m = def.system.m;
  const std::uint64_t horizon = def.system.horizon;
  const std::uint64_t window = run.trace.options().window;
  fs::create_directories(dir);
  save_experiment(def, (dir / "experiment.json").string());
  const auto snaps = all_snapshots(run.trace);

  {
    const fs::path p = dir / "averages.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    w.row(matrix_header("avg", m));
    for (const auto* rec : snaps) write_matrix_rows(w, rec->step, rec->avg);
    close_out(f, p);
  }
  {
    const fs::path p = dir / "allocations.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    w.row(matrix_header("alloc", m));
    for (const auto* rec : snaps)
      if (rec->step + window > horizon) write_matrix_rows(w, rec->step, rec->alloc);
    close_out(f, p);
  }
  {
    const fs::path p = dir / "gradient_spread.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    std::vector<std::string> h{"step"};
    for (std::size_t j = 0; j < m; ++j) {
      h.push_back(col("mean", j));
      h.push_back(col("std", j));
      h.push_back(col("cv", j));
    }
    w.row(h);
    for (const auto* rec : snaps) {
      std::vector<std::string> row{fmt(rec->step)};
      for (const auto& s : gradient_spread(*rec, run.costs)) {
        row.push_back(fmt(s.mean));
        row.push_back(fmt(s.stddev));
        row.push_back(fmt(s.cv()));
      }
      w.row(row);
    }
    close_out(f, p);
  }
  {
    const fs::path p = dir / "series.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    const bool binary = def.mode == Mode::Binary;
    std::vector<std::string> h{"step"};
    for (std::size_t j = 0; j < m; ++j) h.push_back(col("total", j));
    for (std::size_t j = 0; j < m; ++j) h.push_back(col("avg_total", j));
    h.push_back("bits");
    for (std::size_t j = 0; j < m; ++j) h.push_back(col(binary ? "omega" : "signal", j));
    if (binary)
      for (std::size_t j = 0; j < m; ++j) h.push_back(col("expected_total", j));
    w.row(h);
    auto emit = [&](std::uint64_t step, const std::vector<double>& totals, const std::vector<double>& avg_totals,
                    std::uint64_t bits, const ControlSignal& sig, const std::vector<double>& expected) {
      std::vector<std::string> row{fmt(step)};
      for (double v : totals) row.push_back(fmt(v));
      for (double v : avg_totals) row.push_back(fmt(v));
      row.push_back(fmt(bits));
      for (std::size_t j = 0; j < m; ++j)
        row.push_back(binary ? fmt(sig.omega.at(j)) : std::string(sig.bits.at(j) ? "1" : "0"));
      if (binary)
        for (std::size_t j = 0; j < m; ++j) row.push_back(j < expected.size() ? fmt(expected[j]) : "NA");
      w.row(row);
    };
    const TraceRecord& init = run.trace.initial();
    emit(init.step, init.totals, init.avg_totals, 0, init.signal, init.expected_totals);
    for (const auto& s : run.trace.series()) emit(s.step, s.totals, s.avg_totals, s.bits_broadcast, s.signal, s.expected_totals);
    close_out(f, p);
  }
  {
    const fs::path p = dir / "summary.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    w.row({"key", "value"});
    for (const auto& [k, v] : summarize(run, oracle)) w.row({k, v});
    close_out(f, p);
  }
}

void write_oracle(const SolverResult& result, const ExperimentDef& def, const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t m = def.system.m;
  {
    const fs::path p = dir / "oracle.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    std::vector<std::string> h{"agent"};
    for (std::size_t j = 0; j < m; ++j) h.push_back(col("x", j));
    w.row(h);
    for (Eigen::Index i = 0; i < result.solution.rows(); ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (Eigen::Index j = 0; j < result.solution.cols(); ++j) row.push_back(fmt(result.solution(i, j)));
      w.row(row);
    }
    close_out(f, p);
  }
  {
    const fs::path p = dir / "kkt.csv";
    auto f = open_out(p);
    CsvWriter w(f);
    w.row({"key", "value"});
    w.row({"experiment", def.name});
    w.row({"seed", fmt(def.system.master_seed)});
    w.row({"converged", result.converged ? "1" : "0"});
    w.row({"iterations", fmt(result.iterations)});
    w.row({"objective", fmt(result.objective)});
    w.row({"kkt_residual", fmt(result.kkt_residual)});
    const std::optional<double> cap = def.mode == Mode::Binary ? std::optional<double>(1.0) : std::nullopt;
    const auto costs = build_costs(def);
    const auto spread = kkt_consensus_residual(result.solution, costs, cap);
    for (std::size_t j = 0; j < spread.size(); ++j) w.row({col("consensus_spread", j), fmt(spread[j])});
    for (std::size_t j = 0; j < m; ++j)
      w.row({col("total", j), fmt(result.solution.col(static_cast<Eigen::Index>(j)).sum())});
    close_out(f, p);
  }
}

Matrix read_oracle(const fs::path& oracle_csv, std::size_t n, std::size_t m) {
  const CsvTable t = read_csv_file(oracle_csv.string());
  if (t.rows.size() != n) throw ConfigError("oracle: expected " + std::to_string(n) + " agents in " + oracle_csv.string());
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  const std::size_t agent_col = t.column("agent");
  for (const auto& row : t.rows) {
    const std::size_t i = parse_u64(row.at(agent_col));
    if (i >= n) throw ConfigError("oracle: agent index out of range");
    for (std::size_t j = 0; j < m; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(row.at(t.column(col("x", j))));
  }
  return x;
}

std::vector<criteria::Result> evaluate_run_dir(const fs::path& run_dir, const std::optional<fs::path>& oracle_csv) {
  for (const char* name : {"experiment.json", "series.csv", "averages.csv", "gradient_spread.csv", "summary.csv"})
    if (!fs::exists(run_dir / name)) throw UsageError("run directory lacks " + std::string(name) + ": " + run_dir.string());
  const ExperimentDef def = load_experiment((run_dir / "experiment.json").string());
  const std::size_t n = def.system.n;
  const std::size_t m = def.system.m;
  const std::uint64_t horizon = def.system.horizon;
  const auto costs = build_costs(def);

  std::map<std::string, std::string> summary;
  {
    const CsvTable t = read_csv_file((run_dir / "summary.csv").string());
    for (const auto& row : t.rows) summary[row.at(0)] = row.at(1);
  }
  auto stat = [&](const std::string& prefix) {
    ProbabilityStats s;
    s.evaluations = parse_u64(summary.at(prefix + "_evaluations"));
    if (s.evaluations > 0) {
      s.min = parse_double(summary.at(prefix + "_min"));
      s.max = parse_double(summary.at(prefix + "_max"));
    }
    if (summary.count(prefix + "_clamped")) s.clamped = parse_u64(summary.at(prefix + "_clamped"));
    return s;
  };

  // Per-step series: row 0 is the initial state.
  const CsvTable series = read_csv_file((run_dir / "series.csv").string());
  std::vector<std::vector<double>> totals;
  std::vector<std::vector<double>> signals;
  std::vector<std::uint64_t> bits;
  std::vector<double> final_avg_totals;
  for (const auto& row : series.rows) {
    std::vector<double> t(m), s(m);
    for (std::size_t j = 0; j < m; ++j) {
      t[j] = parse_double(row.at(series.column(col("total", j))));
      s[j] = parse_double(row.at(series.column(col(def.mode == Mode::Binary ? "omega" : "signal", j))));
    }
    totals.push_back(std::move(t));
    signals.push_back(std::move(s));
    bits.push_back(parse_u64(row.at(series.column("bits"))));
  }
  if (!series.rows.empty()) {
    for (std::size_t j = 0; j < m; ++j)
      final_avg_totals.push_back(parse_double(series.rows.back().at(series.column(col("avg_total", j)))));
  }
  const bool complete = series.rows.size() == horizon + 1 && horizon > 0;

  // Gradient spread at the final step and the early reference step.
  const CsvTable spread = read_csv_file((run_dir / "gradient_spread.csv").string());
  std::optional<std::vector<std::pair<double, double>>> early, final;  // (std, cv) per resource
  for (const auto& row : spread.rows) {
    const std::uint64_t step = parse_u64(row.at(0));
    if (step != criteria::kEarlyStep && step != horizon) continue;
    std::vector<std::pair<double, double>> v;
    for (std::size_t j = 0; j < m; ++j)
      v.emplace_back(parse_double(row.at(spread.column(col("std", j)))),
                     parse_double(row.at(spread.column(col("cv", j)))));
    if (step == criteria::kEarlyStep) early = v;
    if (step == horizon) final = v;
  }

  std::vector<criteria::Result> out;
  const std::vector<std::uint64_t> step_bits(bits.begin() + (bits.empty() ? 0 : 1), bits.end());
  if (def.mode == Mode::Divisible) {
    if (!oracle_csv) throw UsageError("divisible runs need --oracle");
    const Matrix oracle = read_oracle(*oracle_csv, n, m);
    Matrix final_avg;
    {
      const CsvTable avg = read_csv_file((run_dir / "averages.csv").string());
      Matrix x = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m),
                                  std::numeric_limits<double>::quiet_NaN());
      std::size_t seen = 0;
      for (const auto& row : avg.rows) {
        if (parse_u64(row.at(0)) != horizon) continue;
        const std::size_t i = parse_u64(row.at(1));
        if (i >= n) throw ConfigError("averages.csv: agent index out of range");
        for (std::size_t j = 0; j < m; ++j)
          x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(row.at(avg.column(col("avg", j))));
        ++seen;
      }
      if (seen == n && complete) final_avg = x;
    }
    out.push_back(criteria::divisible_convergence(final_avg, oracle));
    out.push_back(criteria::cost_ratio(final_avg, oracle, costs));
    out.push_back(complete ? criteria::capacity_tracking(final_avg_totals, def.system)
                           : criteria::capacity_tracking({}, def.system));
    std::vector<double> final_cv;
    if (final && complete)
      for (const auto& [s, c] : *final) final_cv.push_back(c);
    std::optional<std::vector<double>> early_cv;
    if (early) {
      early_cv.emplace();
      for (const auto& [s, c] : *early) early_cv->push_back(c);
    }
    out.push_back(criteria::derivative_consensus(final_cv, early_cv));
    out.push_back(criteria::probability_bound(stat("lambda")));
    out.push_back(criteria::divisible_bits(step_bits, m));

    // Replay: each step's bits recompute from the previous step's totals.
    criteria::Result replay{"C11", "signal replay", !step_bits.empty(), {}};
    std::uint64_t mismatches = 0;
    for (std::size_t k = 1; k < totals.size(); ++k) {
      std::uint64_t count = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const auto& r = def.system.resources[j];
        const bool expect = totals[k - 1][j] > r.headroom * r.capacity;
        count += expect ? 1 : 0;
        if ((signals[k][j] != 0.0) != expect) ++mismatches;
      }
      if (count != bits[k]) ++mismatches;
    }
    replay.pass = replay.pass && mismatches == 0;
    replay.detail = std::to_string(mismatches) + " mismatches over " + std::to_string(step_bits.size()) + " steps";
    out.push_back(replay);
  } else {
    if (oracle_csv && !fs::exists(*oracle_csv)) throw UsageError("oracle file not found: " + oracle_csv->string());
    out.push_back(criteria::binary_bits(step_bits, m, def.binary.mu_bits));
    std::vector<std::vector<double>> step_totals(totals.begin() + (totals.empty() ? 0 : 1), totals.end());
    out.push_back(criteria::binary_capacity(complete ? tail_mean(step_totals, m, criteria::kBinaryTailWindow)
                                                     : std::nullopt,
                                            def.system));
    std::optional<double> early_std;
    if (early) early_std = (*early)[0].first;
    const double final_std = final && complete ? (*final)[0].first : std::numeric_limits<double>::quiet_NaN();
    auto consensus = criteria::binary_consensus(final_std, early_std);
    if (!(final && complete)) {
      consensus.pass = false;
      consensus.detail = "insufficient data (run incomplete)";
    }
    out.push_back(consensus);
    out.push_back(criteria::sigma_range(stat("sigma")));

    // Omega telescoping from the recorded series.
    criteria::Result tele{"C11", "omega telescoping", false, {}};
    const auto omega0 = initial_omega(def.system, def.binary);
    double worst = 0.0;
    std::vector<double> cumulative(m, 0.0);
    for (std::size_t k = 1; k < totals.size(); ++k)
      for (std::size_t j = 0; j < m; ++j) {
        const auto& r = def.system.resources[j];
        cumulative[j] += totals[k - 1][j] - r.headroom * r.capacity;
        const double predicted = -def.binary.tau[j] * cumulative[j];
        const double scale = std::max({std::abs(predicted), std::abs(omega0[j]), 1e-300});
        worst = std::max(worst, std::abs(signals[k][j] - omega0[j] - predicted) / scale);
      }
    const bool floor_hit = summary.count("omega_floor_hits") && summary.at("omega_floor_hits") != "0";
    tele.pass = totals.size() > 1 && worst < 1e-6 && !floor_hit;
    std::ostringstream os;
    os << "max relative error " << worst << " (< 1e-06)" << (floor_hit ? ", floor engaged" : "");
    tele.detail = os.str();
    out.push_back(tele);
  }
  return out;
}

int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err) {
  try {
    manifest.validate();
    const ExperimentDef def = resolve_experiment(manifest);
    const fs::path dir = resolve_out_dir(manifest, def);
    const RunResult run = execute(def, manifest.stride, manifest.window, manifest.parallel);
    const SolverResult oracle = solve_oracle(def, run.costs, 0.0, 200000);
    write_run(run, dir, &oracle);
    out << "run " << def.name << " seed " << def.system.master_seed << " -> " << dir.string() << "\n";
    for (const auto& [k, v] : summarize(run, &oracle)) out << "  " << k << " = " << v << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_oracle(const OracleArgs& args, std::ostream& out, std::ostream& err) {
  try {
    ExperimentDef def = load_def(args.experiment, args.config_path);
    if (args.seed) {
      def = with_seed(std::move(def), *args.seed);
    } else if (!def.seeds.empty()) {
      def = with_seed(std::move(def), def.seeds.front());
    }
    validate_experiment(def);
    const auto costs = build_costs(def);
    const SolverResult result = solve_oracle(def, costs, args.tol, args.max_iters);
    const fs::path dir = args.out_dir.empty() ? fs::current_path() : args.out_dir;
    write_oracle(result, def, dir);
    out << "oracle " << def.name << " seed " << def.system.master_seed << ": " << (result.converged ? "converged" : "NOT converged")
        << " after " << result.iterations << " iterations, kkt residual " << format_double(result.kkt_residual)
        << ", objective " << format_double(result.objective) << " -> " << (dir / "oracle.csv").string() << "\n";
    return result.converged ? kExitOk : kExitFailure;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.oracle && !fs::exists(*args.oracle)) throw UsageError("oracle file not found: " + args.oracle->string());
    const auto results = evaluate_run_dir(args.run_dir, args.oracle);
    for (const auto& r : results) out << criteria::format_line(r) << "\n";
    const bool ok = criteria::all_pass(results);
    out << (ok ? "all criteria passed" : "some criteria FAILED") << "\n";
    return ok ? kExitOk : kExitFailure;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"AIMD multi-resource allocation simulator"};
  app.require_subcommand(1);

  RunManifest run;
  std::uint64_t run_seed = 0, run_horizon = 0;
  std::string run_out;
  auto* sub_run = app.add_subcommand("run", "Run an experiment and write CSV metrics");
  sub_run->add_option("-e,--experiment", run.experiment, "Canned experiment name");
  sub_run->add_option("-c,--config", run.config_path, "Experiment config file (JSON)");
  auto* o_seed = sub_run->add_option("-s,--seed", run_seed, "Master seed override");
  auto* o_horizon = sub_run->add_option("-k,--horizon", run_horizon, "Number of steps override");
  sub_run->add_option("--stride", run.stride, "Snapshot stride")->capture_default_str();
  sub_run->add_option("--window", run.window, "Dense final window width")->capture_default_str();
  sub_run->add_option("-o,--out", run_out, std::string("Output directory (default $") + kOutputRootEnv + "/<name>-seed<seed>)");
  sub_run->add_flag("-p,--parallel", run.parallel, "Step agents in parallel");

  OracleArgs oracle;
  std::uint64_t oracle_seed = 0;
  std::string oracle_out;
  auto* sub_oracle = app.add_subcommand("oracle", "Solve the allocation program and write x*");
  sub_oracle->add_option("-e,--experiment", oracle.experiment, "Canned experiment name");
  sub_oracle->add_option("-c,--config", oracle.config_path, "Experiment config file (JSON)");
  auto* o_oseed = sub_oracle->add_option("-s,--seed", oracle_seed, "Master seed override");
  sub_oracle->add_option("-o,--out", oracle_out, "Output directory (default: current directory)");
  sub_oracle->add_option("--tol", oracle.tol, "KKT residual tolerance (default: experiment's)");
  sub_oracle->add_option("--max-iters", oracle.max_iters, "Iteration cap")->capture_default_str();

  CheckArgs check;
  std::string check_run, check_oracle;
  auto* sub_check = app.add_subcommand("check", "Evaluate acceptance thresholds on a run directory");
  sub_check->add_option("-r,--run", check_run, "Run directory")->required();
  auto* o_oracle = sub_check->add_option("--oracle", check_oracle, "oracle.csv from `aimd oracle`");

  std::string show_name;
  auto* sub_show = app.add_subcommand("show-config", "Print a canned experiment as JSON, or list names");
  sub_show->add_option("name", show_name, "Experiment name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (sub_run->parsed()) {
    if (o_seed->count()) run.seed = run_seed;
    if (o_horizon->count()) run.horizon = run_horizon;
    run.out_dir = run_out;
    return cmd_run(run, out, err);
  }
  if (sub_oracle->parsed()) {
    if (o_oseed->count()) oracle.seed = oracle_seed;
    oracle.out_dir = oracle_out;
    return cmd_oracle(oracle, out, err);
  }
  if (sub_check->parsed()) {
    check.run_dir = check_run;
    if (o_oracle->count()) check.oracle = fs::path(check_oracle);
    return cmd_check(check, out, err);
  }
  if (sub_show->parsed()) {
    if (show_name.empty()) {
      for (const auto& n : experiment_names()) out << n << "\n";
      return kExitOk;
    }
    try {
      out << experiment_to_json(find_experiment(show_name));
      return kExitOk;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  return kExitUsage;
}

}  // namespace aimd::cli
