#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "aimd/config.hpp"
#include "cli.hpp"

using namespace aimd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("aimd_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> summary_of(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& row : read_csv_file((dir / "summary.csv").string()).rows) out[row.at(0)] = row.at(1);
  return out;
}

// Two agents with f_1 = x^2/2 and f_2 = x^2 sharing C = 3.
ExperimentDef two_agent_quadratic(double second_coeff = 1.0) {
  ExperimentDef def;
  def.name = "two-agent";
  def.system.n = 2;
  def.system.m = 1;
  def.system.delta = 0.4;
  def.system.horizon = 100;
  def.system.resources = {ResourceSpec{3.0, 0.01, 0.5, 0.4, 1.0}};
  CostClass a{"a", 0.5, {}, {TermSpec{0.5, "", {2}, 0, {}}}};
  CostClass b{"b", 0.5, {}, {TermSpec{second_coeff, "", {2}, 0, {}}}};
  def.cost_family.classes = {a, b};
  def.box = DomainBox::uniform(1, 0.01, 3.0, 64);
  def.oracle_tol = 1e-12;
  def.seeds = {1};
  return def;
}

std::ostringstream sink_out, sink_err;

}  // namespace

TEST_CASE("run, oracle and check on the divisible experiment") {
  const auto dir = scratch("div");
  cli::RunManifest m;
  m.experiment = "divisible-paper";
  m.out_dir = dir / "run";
  REQUIRE(cli::cmd_run(m, sink_out, sink_err) == cli::kExitOk);
  for (const char* f : {"experiment.json", "averages.csv", "allocations.csv", "gradient_spread.csv", "series.csv",
                        "summary.csv"})
    CHECK(fs::exists(dir / "run" / f));
  auto s = summary_of(dir / "run");
  CHECK(s.at("status") == "ok");
  CHECK(s.at("seed") == "1");
  CHECK(std::stod(s.at("cost_ratio")) > 0.9);
  CHECK(s.at("oracle_converged") == "1");

  cli::OracleArgs o;
  o.experiment = "divisible-paper";
  o.out_dir = dir / "oracle";
  REQUIRE(cli::cmd_oracle(o, sink_out, sink_err) == cli::kExitOk);
  CHECK(fs::exists(dir / "oracle" / "oracle.csv"));
  CHECK(fs::exists(dir / "oracle" / "kkt.csv"));

  std::ostringstream table;
  CHECK(cli::cmd_check(cli::CheckArgs{dir / "run", dir / "oracle" / "oracle.csv"}, table, sink_err) == cli::kExitOk);
  CHECK(table.str().find("[FAIL]") == std::string::npos);

  SUBCASE("truncated run fails the convergence criteria") {
    cli::RunManifest t = m;
    t.horizon = 100;
    t.out_dir = dir / "short";
    REQUIRE(cli::cmd_run(t, sink_out, sink_err) == cli::kExitOk);
    std::ostringstream out;
    CHECK(cli::cmd_check(cli::CheckArgs{dir / "short", dir / "oracle" / "oracle.csv"}, out, sink_err) ==
          cli::kExitFailure);
    CHECK(out.str().find("[FAIL] C1") != std::string::npos);
    CHECK(out.str().find("[FAIL] C4") != std::string::npos);
  }
  SUBCASE("missing oracle is a usage error") {
    CHECK(cli::cmd_check(cli::CheckArgs{dir / "run", dir / "missing.csv"}, sink_out, sink_err) == cli::kExitUsage);
    CHECK(cli::cmd_check(cli::CheckArgs{dir / "run", std::nullopt}, sink_out, sink_err) == cli::kExitUsage);
    CHECK(cli::cmd_check(cli::CheckArgs{dir / "none", dir / "oracle" / "oracle.csv"}, sink_out, sink_err) ==
          cli::kExitUsage);
  }
}

TEST_CASE("horizon 0 produces an empty trace flagged as insufficient") {
  const auto dir = scratch("h0");
  cli::RunManifest m;
  m.experiment = "divisible-paper";
  m.horizon = 0;
  m.out_dir = dir;
  REQUIRE(cli::cmd_run(m, sink_out, sink_err) == cli::kExitOk);
  const auto s = summary_of(dir);
  CHECK(s.at("status") == "insufficient_data");
  CHECK(s.at("steps") == "0");
  CHECK(s.at("cost_ratio") == "NA");
  const auto series = read_csv_file((dir / "series.csv").string());
  CHECK(series.rows.size() == 1);  // the initial state only
}

TEST_CASE("invalid configs exit nonzero") {
  const auto dir = scratch("bad");
  auto def = experiment_divisible_paper();
  def.system.resources[1].gamma_norm = 0.5;  // > delta = 1/35
  save_experiment(def, (dir / "bad.json").string());
  cli::RunManifest m;
  m.config_path = (dir / "bad.json").string();
  m.out_dir = dir / "run";
  std::ostringstream err;
  CHECK(cli::cmd_run(m, sink_out, err) == cli::kExitFailure);
  CHECK(err.str().find("gamma_norm") != std::string::npos);

  m.config_path = (dir / "missing.json").string();
  CHECK(cli::cmd_run(m, sink_out, sink_err) == cli::kExitFailure);

  cli::RunManifest both;
  both.experiment = "divisible-paper";
  both.config_path = "x.json";
  CHECK(cli::cmd_run(both, sink_out, sink_err) == cli::kExitUsage);
  cli::RunManifest stride0;
  stride0.experiment = "divisible-paper";
  stride0.stride = 0;
  CHECK(cli::cmd_run(stride0, sink_out, sink_err) == cli::kExitUsage);
}

TEST_CASE("oracle on small configs") {
  const auto dir = scratch("oracle");
  save_experiment(two_agent_quadratic(), (dir / "q.json").string());
  cli::OracleArgs o;
  o.config_path = (dir / "q.json").string();
  o.out_dir = dir / "q";
  REQUIRE(cli::cmd_oracle(o, sink_out, sink_err) == cli::kExitOk);
  const Matrix x = cli::read_oracle(dir / "q" / "oracle.csv", 2, 1);
  CHECK(x(0, 0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(x(1, 0) == doctest::Approx(1.0).epsilon(1e-6));

  save_experiment(two_agent_quadratic(0.5), (dir / "sym.json").string());
  o.config_path = (dir / "sym.json").string();
  o.out_dir = dir / "sym";
  REQUIRE(cli::cmd_oracle(o, sink_out, sink_err) == cli::kExitOk);
  const Matrix y = cli::read_oracle(dir / "sym" / "oracle.csv", 2, 1);
  CHECK(y(0, 0) == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(y(1, 0) == doctest::Approx(1.5).epsilon(1e-8));

  // Unit-demand program with C = 3 > n * 1.
  auto bin = two_agent_quadratic();
  bin.mode = Mode::Binary;
  bin.system.resources[0].gamma_norm = 0.4;
  bin.binary = BinaryInit{{0.1}, {0.01}, 32};
  save_experiment(bin, (dir / "inf.json").string());
  o.config_path = (dir / "inf.json").string();
  o.out_dir = dir / "inf";
  std::ostringstream err;
  CHECK(cli::cmd_oracle(o, sink_out, err) == cli::kExitFailure);
  CHECK(err.str().find("exceeds n * cap") != std::string::npos);

  // An iteration cap too small to converge is reported as failure.
  o.config_path = (dir / "q.json").string();
  o.out_dir = dir / "capped";
  o.max_iters = 1;
  o.tol = 1e-15;
  CHECK(cli::cmd_oracle(o, sink_out, sink_err) == cli::kExitFailure);
}

TEST_CASE("repeated runs give byte-identical CSVs") {
  const auto dir = scratch("det");
  for (const char* name : {"divisible-paper", "binary-paper"}) {
    cli::RunManifest m;
    m.experiment = name;
    m.horizon = 1500;
    m.out_dir = dir / (std::string(name) + "-a");
    REQUIRE(cli::cmd_run(m, sink_out, sink_err) == cli::kExitOk);
    m.out_dir = dir / (std::string(name) + "-b");
    m.parallel = true;
    REQUIRE(cli::cmd_run(m, sink_out, sink_err) == cli::kExitOk);
    for (const char* f : {"averages.csv", "allocations.csv", "gradient_spread.csv", "series.csv", "summary.csv",
                          "experiment.json"}) {
      CAPTURE(f);
      CHECK(slurp(dir / (std::string(name) + "-a") / f) == slurp(dir / (std::string(name) + "-b") / f));
    }
  }
}

TEST_CASE("binary run check") {
  const auto dir = scratch("bin");
  cli::RunManifest m;
  m.experiment = "binary-paper";
  m.horizon = 3000;
  m.out_dir = dir;
  REQUIRE(cli::cmd_run(m, sink_out, sink_err) == cli::kExitOk);
  const auto results = cli::evaluate_run_dir(dir, std::nullopt);
  for (const auto& r : results) {
    CAPTURE(r.detail);
    if (r.id == "C6" || r.id == "C11" || r.id == "C7") CHECK(r.pass);
  }
  const auto s = summary_of(dir);
  CHECK(std::stod(s.at("omega_telescoping_max_rel_error")) < 1e-6);
}

TEST_CASE("command line parsing") {
  auto call = [](std::vector<std::string> args, std::ostream& out) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, sink_err);
  };
  std::ostringstream out;
  CHECK(call({"aimd", "show-config"}, out) == cli::kExitOk);
  CHECK(out.str().find("divisible-paper") != std::string::npos);
  std::ostringstream json;
  CHECK(call({"aimd", "show-config", "binary-paper"}, json) == cli::kExitOk);
  CHECK(experiment_from_json(json.str()) == experiment_binary_paper());
  CHECK(call({"aimd", "bogus"}, out) == cli::kExitUsage);
  CHECK(call({"aimd"}, out) == cli::kExitUsage);
  CHECK(call({"aimd", "check"}, out) == cli::kExitUsage);
  std::ostringstream help;
  CHECK(call({"aimd", "--help"}, help) == cli::kExitOk);

  const auto dir = scratch("argv");
  CHECK(call({"aimd", "run", "-e", "divisible-paper", "-k", "50", "-s", "9", "-o", (dir / "r").string()}, out) ==
        cli::kExitOk);
  CHECK(summary_of(dir / "r").at("seed") == "9");
  CHECK(summary_of(dir / "r").at("horizon") == "50");
}

TEST_CASE("output root from the environment") {
  const auto dir = scratch("env");
  ::setenv(cli::kOutputRootEnv, dir.c_str(), 1);
  cli::RunManifest m;
  m.experiment = "divisible-paper";
  m.seed = 4;
  const auto def = cli::resolve_experiment(m);
  CHECK(cli::resolve_out_dir(m, def) == dir / "divisible-paper-seed4");
  ::unsetenv(cli::kOutputRootEnv);
  CHECK(cli::resolve_out_dir(m, def) == fs::path("runs") / "divisible-paper-seed4");
}
