// Ground truth on the true MDP: backward induction, the linear-Q identity,
// the weighted average MDP with its bias bounds, and dynamic regret.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "optwlsvi/agent.hpp"
#include "optwlsvi/mdp_model.hpp"
#include "optwlsvi/wls_core.hpp"

namespace optwlsvi {

TabularEpisode tabulate(const NonStationaryLinearMDP& mdp, int t);

/// values[h] has |S| entries for h = 0..H, with values[H] = 0;
/// q[h] is |S| x |A| for h = 0..H-1.
struct ValueTable {
  int t = 0;
  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::MatrixXd> q;
};

ValueTable optimal_values(const TabularEpisode& episode);
ValueTable optimal_values(const NonStationaryLinearMDP& mdp, int t);

ValueTable policy_values(const TabularEpisode& episode, const Policy& policy);
ValueTable policy_values(const NonStationaryLinearMDP& mdp, int t, const Policy& policy);

/// First maximizer of each Q row.
Policy greedy_policy(const ValueTable& table);

/// max over (h, s, a) of |Q[h](s,a) - phi(s,a)^T (theta_{t,h} + mu_{t,h} V[h+1])|
/// for an externally supplied value table.
double linear_q_residual(const NonStationaryLinearMDP& mdp, int t, const ValueTable& table);

/// linear_q_residual of policy_values(mdp, t, policy).
double linear_q_check(const NonStationaryLinearMDP& mdp, int t, const Policy& policy);

struct WeightedAverageStep {
  /// |S| x |A|.
  Eigen::MatrixXd bar_reward;
  /// (|S|*|A|) x |S|, signed rows stored raw.
  Eigen::MatrixXd bar_transition;
};

/// Weighted average MDP at (t, h) for the Gram state and history absorbed
/// from episodes 0..t-1 at step h:
/// phi^T S^-1 (sum_tau eta^(t-1-tau) phi_tau phi_tau^T theta_tau + lambda theta_t),
/// and likewise for mu.
WeightedAverageStep weighted_average_step(const NonStationaryLinearMDP& mdp,
                                          const History& history, const GramState& gram,
                                          int t, int h);

struct BiasBounds {
  double reward = 0.0;
  double transition = 0.0;
  double total = 0.0;  // reward + 2 transition
};

/// Non-stationarity bias bounds for window W in [1, t] (t counts the
/// episodes already absorbed). Rejects eta = 1.
BiasBounds bias_bounds(const NonStationaryLinearMDP& mdp, int t, int h, int window,
                       double eta, double lambda);

struct ExecutedEpisode {
  int t;
  int initial_state;
  Policy policy;
};

struct RegretSeries {
  std::vector<double> per_episode;
  std::vector<double> cumulative;
};

/// regret_t = V*_{t,0}(s_{t,0}) - V^{pi_t}_{t,0}(s_{t,0}). Throws
/// std::logic_error if any increment is below -1e-9.
RegretSeries dynamic_regret(const NonStationaryLinearMDP& mdp,
                            const std::vector<ExecutedEpisode>& episodes);

/// Single-episode regret term.
double episode_regret(const NonStationaryLinearMDP& mdp, const ExecutedEpisode& episode);

/// Plays the optimal policy of each episode.
class OracleAgent final : public Agent {
 public:
  EpisodeOutcome run_episode(const NonStationaryLinearMDP& mdp, Rng& rng, int t) override;
};

}  // namespace optwlsvi
