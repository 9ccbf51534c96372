#include "aimd/core.hpp"

#include <cmath>
#include <sstream>

namespace aimd {

std::string to_string(Mode mode) { return mode == Mode::Divisible ? "divisible" : "binary"; }

Mode mode_from_string(const std::string& name) {
  if (name == "divisible") return Mode::Divisible;
  if (name == "binary") return Mode::Binary;
  throw ConfigError("unknown mode '" + name + "' (expected 'divisible' or 'binary')");
}

void ResourceSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("resource: " + what); };
  if (!(capacity > 0.0) || !std::isfinite(capacity)) fail("capacity must be > 0");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be > 0");
  if (!(beta >= 0.0 && beta < 1.0)) fail("beta must lie in [0, 1)");
  if (!(gamma_norm > 0.0) || !std::isfinite(gamma_norm)) fail("gamma_norm must be > 0");
  if (!(headroom > 0.0 && headroom <= 1.0)) fail("headroom must lie in (0, 1]");
}

void SystemConfig::validate() const {
  if (n == 0) throw ConfigError("system: n must be positive");
  if (m == 0) throw ConfigError("system: m must be positive");
  if (resources.size() != m) {
    std::ostringstream os;
    os << "system: expected " << m << " resources, got " << resources.size();
    throw ConfigError(os.str());
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("system: delta must be > 0");
  for (std::size_t j = 0; j < m; ++j) {
    resources[j].validate();
    if (resources[j].gamma_norm > delta) {
      std::ostringstream os;
      os << "system: resource " << j << " has gamma_norm " << resources[j].gamma_norm
         << " > delta " << delta;
      throw ConfigError(os.str());
    }
  }
}

double update_running_average(double avg_k, double alloc_k1, std::uint64_t k) {
  const double kp1 = static_cast<double>(k) + 1.0;
  return (kp1 * avg_k + alloc_k1) / (kp1 + 1.0);
}

RandomStream::RandomStream(std::uint64_t seed) : engine_(seed) {}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
constexpr std::uint64_t kAgentDomain = 0x6167656e74ULL;  // "agent"
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t domain, std::uint64_t index) {
  return mix64(mix64(mix64(master_seed) ^ domain) + index);
}

RandomStream spawn_agent_stream(std::uint64_t master_seed, std::uint64_t agent_id,
                                std::uint64_t resource_id) {
  const std::uint64_t per_agent = derive_seed(master_seed, kAgentDomain, agent_id);
  return RandomStream(mix64(per_agent ^ mix64(resource_id + 1)));
}

bool bernoulli(RandomStream& stream, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << "bernoulli: probability " << p << " outside [0, 1]";
    throw NumericError(os.str());
  }
  // Draw unconditionally so p in {0, 1} still advances the stream.
  const double u = stream.uniform();
  return u < p;
}

AgentState::AgentState(std::size_t m, std::uint64_t master_seed, std::uint64_t agent_id,
                       double initial_alloc)
    : alloc(m, initial_alloc), avg(m, initial_alloc), step(0) {
  streams.reserve(m);
  for (std::size_t j = 0; j < m; ++j) streams.push_back(spawn_agent_stream(master_seed, agent_id, j));
}

ControlSignal ControlSignal::divisible(std::vector<bool> bits) {
  ControlSignal s;
  s.mode = Mode::Divisible;
  s.bits = std::move(bits);
  return s;
}

ControlSignal ControlSignal::binary(std::vector<double> omega) {
  ControlSignal s;
  s.mode = Mode::Binary;
  s.omega = std::move(omega);
  return s;
}

}  // namespace aimd
