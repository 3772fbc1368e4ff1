// Optimistic weighted least-squares value iteration.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optwlsvi/mdp_model.hpp"
#include "optwlsvi/wls_core.hpp"

namespace optwlsvi {

/// Deterministic policy table: policy[h][s] is the action taken at step h in
/// state s.
using Policy = std::vector<std::vector<int>>;

struct AgentConfig {
  double eta = 1.0;
  double lambda = 1.0;
  /// Explicit bonus scale; when empty, beta comes from beta_from_theory().
  std::optional<double> beta;
  double delta = 0.1;
  double c_abs = 1.0;
};

/// beta = c d H sqrt(log(2 d H / (delta (1 - eta)))). Requires eta < 1.
double beta_from_theory(int dim, int horizon, double eta, double delta, double c);

/// eta = exp(-(budget / (d K))^(2/3)), clamped into [1e-6, 1 - 1e-12].
double eta_from_budget(double budget, int dim, int num_episodes);

double resolve_beta(const AgentConfig& config, int dim, int horizon);

/// Per-episode plan: weights w_h and the optimistic Q tables they induce,
/// Q_h(s, a) = phi(s,a)^T w_h + beta ||phi(s,a)||_{S^-1 S~ S^-1}.
class PolicySnapshot {
 public:
  PolicySnapshot(int num_states, int num_actions, double clip, double beta,
                 std::vector<Eigen::VectorXd> weights, std::vector<Eigen::MatrixXd> q_tables);

  int horizon() const { return static_cast<int>(weights_.size()); }
  double beta() const { return beta_; }
  const Eigen::VectorXd& weights(int h) const { return weights_.at(h); }
  /// |S| x |A| table of Q_h.
  const Eigen::MatrixXd& q_table(int h) const { return q_tables_.at(h); }

  double q_value(int h, int s, int a) const { return q_tables_.at(h)(s, a); }
  /// min(max_a Q_h(s, a), H); not clipped below.
  double value(int h, int s) const;
  /// First maximizer of Q_h(s, .).
  int act(int h, int s) const;
  Policy greedy_policy() const;

 private:
  int num_states_;
  int num_actions_;
  double clip_;
  double beta_;
  std::vector<Eigen::VectorXd> weights_;
  std::vector<Eigen::MatrixXd> q_tables_;
};

struct PlanDiagnostics {
  int negative_values = 0;
  double max_weight_norm = 0.0;
};

/// Backward pass h = H-1..0: V_H = 0, w_h = S_h^-1 b_h(V_{h+1}),
/// V_h = min(max_a Q_h, H). Throws NumericalFault if a weight exceeds the
/// iterate bound, a bonus exceeds beta / sqrt(lambda) or |V_h| > H.
PolicySnapshot plan_episode(const std::vector<History>& histories,
                            const std::vector<GramState>& grams, double beta,
                            const FeatureMap& features, PlanDiagnostics* diagnostics = nullptr);

struct StepTransition {
  int state;
  int action;
  double reward;
  int next_state;
};

struct EpisodeOutcome {
  int t = 0;
  std::vector<StepTransition> steps;
  double realized_return = 0.0;
  /// Greedy policy over all states, used to evaluate regret.
  Policy policy;
  /// Agent's own estimate V_{t,0}(s_{t,0}); NaN for agents without one.
  double estimated_value = 0.0;
  int negative_values = 0;
  double max_weight_norm = 0.0;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual EpisodeOutcome run_episode(const NonStationaryLinearMDP& mdp, Rng& rng, int t) = 0;
};

/// Rolls out one episode of `policy_fn(h, s) -> action` starting from a
/// sampled initial state.
template <typename PolicyFn>
std::vector<StepTransition> rollout(const NonStationaryLinearMDP& mdp, Rng& rng, int t,
                                    PolicyFn&& policy_fn) {
  std::vector<StepTransition> steps;
  steps.reserve(static_cast<std::size_t>(mdp.horizon()));
  int s = sample_initial_state(mdp, rng);
  for (int h = 0; h < mdp.horizon(); ++h) {
    const int a = policy_fn(h, s);
    const double r = reward(mdp, t, h, s, a);
    const int next = sample_next_state(mdp, rng, t, h, s, a);
    steps.push_back({s, a, r, next});
    s = next;
  }
  return steps;
}

class OptWlsviAgent final : public Agent {
 public:
  OptWlsviAgent(const AgentConfig& config, int dim, int horizon);

  /// Plans from the current history, executes the greedy policy, then
  /// appends the observed transitions and updates the Gram states.
  EpisodeOutcome run_episode(const NonStationaryLinearMDP& mdp, Rng& rng, int t) override;

  PolicySnapshot plan(const FeatureMap& features, PlanDiagnostics* diagnostics = nullptr) const;

  double beta() const { return beta_; }
  const AgentConfig& config() const { return config_; }
  const std::vector<History>& histories() const { return histories_; }
  const std::vector<GramState>& grams() const { return grams_; }

 private:
  AgentConfig config_;
  double beta_;
  std::vector<History> histories_;
  std::vector<GramState> grams_;
};

}  // namespace optwlsvi
