// Seeded generators of valid non-stationary linear MDP schedules.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "optwlsvi/mdp_model.hpp"

namespace optwlsvi {

/// Parameters of one episode (all H steps) over a fixed feature map.
struct EpisodeSlice {
  FeatureMap features;
  std::vector<StepParams> steps;
  Eigen::VectorXd initial_state_dist;

  int horizon() const { return static_cast<int>(steps.size()); }
};

/// Symmetric Dirichlet(1) draw, i.e. uniform on the (n-1)-simplex.
Eigen::VectorXd sample_simplex(Rng& rng, int n);

/// Mixture construction: simplex features, probability-measure components
/// and nonnegative theta rescaled so rewards lie in [0, 1] and
/// ||theta|| <= sqrt(d). Uniform initial distribution.
EpisodeSlice make_mixture_slice(Rng& rng, int num_states, int num_actions, int dim,
                                int horizon);

/// Fresh per-step parameters for an existing simplex feature map, drawn as
/// in make_mixture_slice.
std::vector<StepParams> make_mixture_params(Rng& rng, const FeatureMap& features, int horizon);

/// Random tabular episode: rewards uniform on [0, 1), transition rows Dirichlet(1).
TabularEpisode make_random_tabular(Rng& rng, int num_states, int num_actions, int horizon);

/// Relabels actions a -> |A|-1-a in both rewards and transitions.
TabularEpisode reverse_actions(const TabularEpisode& episode);

/// One-hot embedding with d = |S||A|: phi(s,a) = e_{s|A|+a}, theta = r, mu = P.
/// Throws std::invalid_argument for rewards outside [0, 1] or rows that are
/// not probability vectors.
EpisodeSlice embed_tabular(const TabularEpisode& episode, Eigen::VectorXd initial_state_dist);

/// Repeats `slice` for K episodes.
NonStationaryLinearMDP constant_schedule(const EpisodeSlice& slice, int num_episodes);

/// Episodes before switch_points[0] use slice_a; the active slice toggles at
/// each switch point. Switch points are episode indices, strictly increasing,
/// in [1, K-1].
NonStationaryLinearMDP abrupt_switch(const EpisodeSlice& slice_a, const EpisodeSlice& slice_b,
                                     int num_episodes, const std::vector<int>& switch_points);

/// Episode t uses (1 - t/(K-1)) slice_a + t/(K-1) slice_b in theta and mu.
NonStationaryLinearMDP drift(const EpisodeSlice& slice_a, const EpisodeSlice& slice_b,
                             int num_episodes);

/// Tabular embedding of one episode table per episode, or a single table
/// repeated for all K episodes.
NonStationaryLinearMDP tabular_embedding(const std::vector<TabularEpisode>& episodes,
                                         int num_episodes,
                                         Eigen::VectorXd initial_state_dist);

/// H = 1, |S| = 1 linear bandit. Rows of `arm_features` are the arms; each
/// must have norm <= 1 and entries summing to one so that mu(s0) = 1 yields
/// an exact self-loop. `reward_params` holds one theta per episode, or a
/// single theta used for all K episodes.
NonStationaryLinearMDP bandit_embedding(const Eigen::MatrixXd& arm_features,
                                        const std::vector<Eigen::VectorXd>& reward_params,
                                        int num_episodes);

}  // namespace optwlsvi
