#include "aimd/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace aimd {

using nlohmann::json;

namespace {

json resource_json(const ResourceSpec& r) {
  return {{"capacity", r.capacity}, {"alpha", r.alpha},         {"beta", r.beta},
          {"gamma_norm", r.gamma_norm}, {"headroom", r.headroom}};
}

ResourceSpec resource_from(const json& j) {
  ResourceSpec r;
  r.capacity = j.at("capacity").get<double>();
  r.alpha = j.value("alpha", r.alpha);
  r.beta = j.value("beta", r.beta);
  r.gamma_norm = j.value("gamma_norm", r.gamma_norm);
  r.headroom = j.value("headroom", 1.0);
  return r;
}

json term_json(const TermSpec& t) {
  json out{{"coeff", t.coeff}};
  if (!t.param.empty()) out["param"] = t.param;
  if (t.sum_power > 0) {
    out["sum_power"] = t.sum_power;
    out["over"] = t.over;
  } else {
    out["exponents"] = t.exponents;
  }
  return out;
}

TermSpec term_from(const json& j) {
  TermSpec t;
  t.coeff = j.at("coeff").get<double>();
  t.param = j.value("param", std::string{});
  if (j.contains("sum_power")) {
    t.sum_power = j.at("sum_power").get<unsigned>();
    t.over = j.at("over").get<std::vector<std::size_t>>();
  } else {
    t.exponents = j.at("exponents").get<std::vector<unsigned>>();
  }
  return t;
}

json class_json(const CostClass& c) {
  json params = json::array();
  for (const auto& p : c.params) params.push_back({{"name", p.name}, {"kind", p.kind}, {"lo", p.lo}, {"hi", p.hi}});
  json terms = json::array();
  for (const auto& t : c.terms) terms.push_back(term_json(t));
  return {{"name", c.name}, {"proportion", c.proportion}, {"params", params}, {"terms", terms}};
}

CostClass class_from(const json& j) {
  CostClass c;
  c.name = j.value("name", std::string{});
  c.proportion = j.value("proportion", 1.0);
  for (const auto& p : j.value("params", json::array()))
    c.params.push_back(ParamSpec{p.at("name").get<std::string>(), p.value("kind", std::string{"constant"}),
                                 p.value("lo", 0.0), p.value("hi", 0.0)});
  for (const auto& t : j.at("terms")) c.terms.push_back(term_from(t));
  return c;
}

}  // namespace

std::string experiment_to_json(const ExperimentDef& def, int indent) {
  json resources = json::array();
  for (const auto& r : def.system.resources) resources.push_back(resource_json(r));
  json classes = json::array();
  for (const auto& c : def.cost_family.classes) classes.push_back(class_json(c));
  json out{
      {"name", def.name},
      {"mode", to_string(def.mode)},
      {"system",
       {{"n", def.system.n},
        {"m", def.system.m},
        {"delta", def.system.delta},
        {"horizon", def.system.horizon},
        {"master_seed", def.system.master_seed},
        {"resources", resources}}},
      {"cost_family", {{"classes", classes}}},
      {"box",
       {{"lower", def.box.lower}, {"upper", def.box.upper}, {"grid_points_per_axis", def.box.grid_points_per_axis}}},
      {"oracle_tol", def.oracle_tol},
      {"seeds", def.seeds},
  };
  if (def.mode == Mode::Binary)
    out["binary"] = {{"omega0", def.binary.omega0}, {"tau", def.binary.tau}, {"mu_bits", def.binary.mu_bits}};
  return out.dump(indent) + "\n";
}

ExperimentDef experiment_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ExperimentDef def;
    def.name = j.at("name").get<std::string>();
    def.mode = mode_from_string(j.at("mode").get<std::string>());
    const json& s = j.at("system");
    def.system.n = s.at("n").get<std::size_t>();
    def.system.m = s.at("m").get<std::size_t>();
    def.system.delta = s.at("delta").get<double>();
    def.system.horizon = s.value("horizon", std::size_t{0});
    def.system.master_seed = s.value("master_seed", std::uint64_t{0});
    for (const auto& r : s.at("resources")) def.system.resources.push_back(resource_from(r));
    for (const auto& c : j.at("cost_family").at("classes")) def.cost_family.classes.push_back(class_from(c));
    const json& b = j.at("box");
    def.box.lower = b.at("lower").get<std::vector<double>>();
    def.box.upper = b.at("upper").get<std::vector<double>>();
    def.box.grid_points_per_axis = b.value("grid_points_per_axis", std::size_t{64});
    def.oracle_tol = j.value("oracle_tol", 1e-10);
    def.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    if (j.contains("binary")) {
      const json& bin = j.at("binary");
      def.binary.omega0 = bin.value("omega0", std::vector<double>{});
      def.binary.tau = bin.at("tau").get<std::vector<double>>();
      def.binary.mu_bits = bin.value("mu_bits", 32U);
    } else if (def.mode == Mode::Binary) {
      throw ConfigError("config: binary mode requires a 'binary' section");
    }
    return def;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentDef load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return experiment_from_json(ss.str());
}

void save_experiment(const ExperimentDef& def, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config '" + path + "'");
  out << experiment_to_json(def);
  if (!out) throw ConfigError("failed writing config '" + path + "'");
}

}  // namespace aimd
