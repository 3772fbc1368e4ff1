// Line-oriented `key = value` experiment configuration.
//
//   # comment
//   episodes = 2000
//   seeds = 1..10                  (or a comma list)
//   env.kind = abrupt-switch       (mixture-random | abrupt-switch | drift | tabular | bandit)
//   env.base = tabular             (tabular | mixture; abrupt-switch and drift only)
//   env.states = 3
//   env.actions = 2
//   env.dim = 4                    (mixture bases only)
//   env.horizon = 3
//   env.seed = 11                  (optional: fixes the instance across run seeds)
//   env.switches = 1000            (abrupt-switch: episode indices)
//   env.switch_mode = reverse-actions   (reverse-actions | independent)
//   env.initial_state = 0          (or `uniform`)
//   env.arm_rewards = 0.2, 0.8     (bandit: one-hot arms with these rewards)
//   agent.0.name = tuned
//   agent.0.kind = opt-wlsvi       (opt-wlsvi | oracle)
//   agent.0.eta = corollary-tv     (number | corollary | corollary-tv | baseline)
//   agent.0.lambda = 1
//   agent.0.beta = theory          (number | theory)
//   agent.0.c = 1
//   agent.0.delta = 0.1
//   threads = 1
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace optwlsvi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw key/value pairs; duplicate keys and malformed lines are errors.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, std::optional<int> fallback = std::nullopt) const;
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  /// Keys that have not been read by any getter.
  std::vector<std::string> unused_keys() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::map<std::string, bool> used_;
};

int parse_int(const std::string& text, const std::string& what);
double parse_double(const std::string& text, const std::string& what);
/// Comma-separated integers, or an inclusive range `a..b`.
std::vector<std::int64_t> parse_int_list(const std::string& text, const std::string& what);

enum class EnvKind { MixtureRandom, AbruptSwitch, Drift, Tabular, Bandit };
enum class EnvBase { Tabular, Mixture };
enum class SwitchMode { ReverseActions, Independent };

struct EnvSpec {
  EnvKind kind = EnvKind::MixtureRandom;
  EnvBase base = EnvBase::Tabular;
  int states = 3;
  int actions = 2;
  int dim = 4;
  int horizon = 3;
  std::optional<std::uint64_t> seed;
  std::vector<int> switch_points;
  SwitchMode switch_mode = SwitchMode::ReverseActions;
  /// Fixed start state; empty means the generator's (uniform) distribution.
  std::optional<int> initial_state;
  std::vector<double> arm_rewards;
};

enum class AgentKind { OptWlsvi, Oracle };
enum class EtaSource { Explicit, FromBudget, FromTvBudget, Baseline };

struct AgentSpec {
  std::string name;
  AgentKind kind = AgentKind::OptWlsvi;
  EtaSource eta_source = EtaSource::Baseline;
  double eta = 1.0;
  double lambda = 1.0;
  std::optional<double> beta;  // empty: theory
  double c_abs = 1.0;
  double delta = 0.1;
};

struct RunConfig {
  EnvSpec env;
  std::vector<AgentSpec> agents;
  int episodes = 0;
  std::vector<std::uint64_t> seeds;
  int threads = 1;
};

RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);

std::string to_string(EnvKind kind);
std::string to_string(EtaSource source);

}  // namespace optwlsvi
