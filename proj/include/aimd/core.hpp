#pragma once

// Shared domain types for the divisible and unit-demand AIMD simulators:
// per-resource parameters, system configuration, agent state, the broadcast
// signal, and the deterministic per-(agent, resource) random streams.

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aimd {

/// Agent-major n x m matrix (row i = agent i, column j = resource j).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration or argument failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A constrained program has no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A probability left [0, 1] or a computed value became non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

enum class Mode { Divisible, Binary };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct ResourceSpec {
  double capacity = 1.0;
  double alpha = 0.01;      // additive increase per step
  double beta = 0.5;        // multiplicative decrease factor
  double gamma_norm = 1.0;  // normalization factor used by the backoff probability
  double headroom = 1.0;    // fraction of capacity that triggers feedback

  void validate() const;
  bool operator==(const ResourceSpec&) const = default;
};

struct SystemConfig {
  std::size_t n = 1;
  std::size_t m = 1;
  std::vector<ResourceSpec> resources;
  double delta = 1.0;
  std::size_t horizon = 0;
  std::uint64_t master_seed = 0;

  /// Throws ConfigError unless every field invariant holds, including
  /// gamma_norm <= delta for every resource.
  void validate() const;
  bool operator==(const SystemConfig&) const = default;
};

/// ((k+1) * avg_k + alloc_k1) / (k+2): the mean of k+2 samples given the
/// mean of the first k+1.
double update_running_average(double avg_k, double alloc_k1, std::uint64_t k);

/// Independent deterministic random stream owned by one (agent, resource)
/// pair. Every draw consumes exactly one 64-bit engine output.
class RandomStream {
 public:
  RandomStream() = default;
  explicit RandomStream(std::uint64_t seed);

  /// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
  double uniform();
  std::uint64_t next_u64() { return engine_(); }

  bool operator==(const RandomStream& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

/// Stream for agent `agent_id` and resource `resource_id` under `master_seed`.
RandomStream spawn_agent_stream(std::uint64_t master_seed, std::uint64_t agent_id,
                                std::uint64_t resource_id);

/// Seed for auxiliary draws (cost coefficients, test instances) that must not
/// overlap any agent stream. `domain` separates independent purposes.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t domain, std::uint64_t index = 0);

/// True with probability p. Throws NumericError if p is outside [0, 1] or NaN.
bool bernoulli(RandomStream& stream, double p);

struct AgentState {
  std::vector<double> alloc;
  std::vector<double> avg;
  std::uint64_t step = 0;
  std::vector<RandomStream> streams;  // one per resource

  AgentState() = default;
  AgentState(std::size_t m, std::uint64_t master_seed, std::uint64_t agent_id, double initial_alloc);
};

struct ControlSignal {
  Mode mode = Mode::Divisible;
  std::vector<bool> bits;     // divisible: capacity-event bit per resource
  std::vector<double> omega;  // binary: normalization factor per resource

  static ControlSignal divisible(std::vector<bool> bits);
  static ControlSignal binary(std::vector<double> omega);

  std::size_t size() const { return mode == Mode::Divisible ? bits.size() : omega.size(); }
  bool operator==(const ControlSignal&) const = default;
};

}  // namespace aimd
