#include "optwlsvi/env_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optwlsvi {

namespace {

void check_compatible(const EpisodeSlice& a, const EpisodeSlice& b) {
  if (a.horizon() != b.horizon() || a.features.num_states != b.features.num_states ||
      a.features.num_actions != b.features.num_actions ||
      a.features.table != b.features.table) {
    throw std::invalid_argument("slices must share features and horizon");
  }
}

StepParams blend(const StepParams& a, const StepParams& b, double weight) {
  return {(1.0 - weight) * a.theta + weight * b.theta,
          (1.0 - weight) * a.measure + weight * b.measure};
}

NonStationaryLinearMDP assemble(const EpisodeSlice& shape, int num_episodes,
                                std::vector<StepParams> schedule) {
  return NonStationaryLinearMDP(shape.features, shape.horizon(), num_episodes,
                                std::move(schedule), shape.initial_state_dist);
}

}  // namespace

Eigen::VectorXd sample_simplex(Rng& rng, int n) {
  if (n < 1) throw std::invalid_argument("sample_simplex: n must be >= 1");
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = -std::log1p(-uniform01(rng));  // Exp(1)
  const double total = v.sum();
  if (!(total > 0.0)) {
    v.setConstant(1.0 / n);
    return v;
  }
  return v / total;
}

EpisodeSlice make_mixture_slice(Rng& rng, int num_states, int num_actions, int dim,
                                int horizon) {
  if (num_states < 1 || num_actions < 1 || dim < 1 || horizon < 1) {
    throw std::invalid_argument("make_mixture_slice: sizes must be positive");
  }
  Eigen::MatrixXd table(static_cast<Eigen::Index>(num_states) * num_actions, dim);
  for (Eigen::Index row = 0; row < table.rows(); ++row) {
    table.row(row) = sample_simplex(rng, dim).transpose();
  }
  EpisodeSlice slice{FeatureMap(num_states, num_actions, std::move(table)), {},
                     Eigen::VectorXd::Constant(num_states, 1.0 / num_states)};
  slice.steps = make_mixture_params(rng, slice.features, horizon);
  return slice;
}

std::vector<StepParams> make_mixture_params(Rng& rng, const FeatureMap& features, int horizon) {
  const int dim = features.dim();
  const int num_states = features.num_states;
  const double sqrt_d = std::sqrt(static_cast<double>(dim));
  std::vector<StepParams> steps;
  for (int h = 0; h < horizon; ++h) {
    StepParams p{Eigen::VectorXd(dim), Eigen::MatrixXd(dim, num_states)};
    for (int i = 0; i < dim; ++i) p.measure.row(i) = sample_simplex(rng, num_states).transpose();
    for (int i = 0; i < dim; ++i) p.theta(i) = uniform01(rng);
    const double max_reward = (features.table * p.theta).maxCoeff();
    p.theta /= std::max({1.0, max_reward, p.theta.norm() / sqrt_d});
    steps.push_back(std::move(p));
  }
  return steps;
}

TabularEpisode make_random_tabular(Rng& rng, int num_states, int num_actions, int horizon) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) {
    throw std::invalid_argument("make_random_tabular: sizes must be positive");
  }
  TabularEpisode ep;
  ep.num_states = num_states;
  ep.num_actions = num_actions;
  for (int h = 0; h < horizon; ++h) {
    Eigen::MatrixXd r(num_states, num_actions);
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) r(s, a) = uniform01(rng);
    }
    Eigen::MatrixXd p(static_cast<Eigen::Index>(num_states) * num_actions, num_states);
    for (Eigen::Index row = 0; row < p.rows(); ++row) {
      p.row(row) = sample_simplex(rng, num_states).transpose();
    }
    ep.reward.push_back(std::move(r));
    ep.transition.push_back(std::move(p));
  }
  return ep;
}

TabularEpisode reverse_actions(const TabularEpisode& episode) {
  TabularEpisode out = episode;
  const int A = episode.num_actions;
  for (int h = 0; h < episode.horizon(); ++h) {
    for (int s = 0; s < episode.num_states; ++s) {
      for (int a = 0; a < A; ++a) {
        const int b = A - 1 - a;
        out.reward[h](s, a) = episode.reward[h](s, b);
        out.transition[h].row(static_cast<Eigen::Index>(s) * A + a) =
            episode.transition[h].row(static_cast<Eigen::Index>(s) * A + b);
      }
    }
  }
  return out;
}

EpisodeSlice embed_tabular(const TabularEpisode& episode, Eigen::VectorXd initial_state_dist) {
  const int S = episode.num_states;
  const int A = episode.num_actions;
  const int d = S * A;
  if (episode.horizon() < 1 || static_cast<int>(episode.transition.size()) != episode.horizon()) {
    throw std::invalid_argument("embed_tabular: need reward and transition tables per step");
  }
  for (int h = 0; h < episode.horizon(); ++h) {
    const auto& r = episode.reward[h];
    const auto& p = episode.transition[h];
    if (r.rows() != S || r.cols() != A || p.rows() != d || p.cols() != S) {
      throw std::invalid_argument("embed_tabular: table shape mismatch");
    }
    if ((r.array() < 0.0).any() || (r.array() > 1.0).any()) {
      throw std::invalid_argument("embed_tabular: rewards must lie in [0, 1]");
    }
    if ((p.array() < 0.0).any() ||
        ((p.rowwise().sum().array() - 1.0).abs() > 1e-12).any()) {
      throw std::invalid_argument("embed_tabular: transition rows must be probability vectors");
    }
  }
  EpisodeSlice slice{FeatureMap(S, A, Eigen::MatrixXd::Identity(d, d)), {},
                     std::move(initial_state_dist)};
  for (int h = 0; h < episode.horizon(); ++h) {
    const Eigen::VectorXd theta = episode.reward[h].reshaped<Eigen::RowMajor>();
    slice.steps.push_back({theta, episode.transition[h]});
  }
  return slice;
}

NonStationaryLinearMDP constant_schedule(const EpisodeSlice& slice, int num_episodes) {
  if (num_episodes < 1) throw std::invalid_argument("constant_schedule: K must be >= 1");
  std::vector<StepParams> schedule;
  schedule.reserve(static_cast<std::size_t>(num_episodes) * slice.horizon());
  for (int t = 0; t < num_episodes; ++t) {
    schedule.insert(schedule.end(), slice.steps.begin(), slice.steps.end());
  }
  return assemble(slice, num_episodes, std::move(schedule));
}

NonStationaryLinearMDP abrupt_switch(const EpisodeSlice& slice_a, const EpisodeSlice& slice_b,
                                     int num_episodes, const std::vector<int>& switch_points) {
  check_compatible(slice_a, slice_b);
  if (num_episodes < 1) throw std::invalid_argument("abrupt_switch: K must be >= 1");
  for (std::size_t i = 0; i < switch_points.size(); ++i) {
    const int p = switch_points[i];
    if (p < 1 || p >= num_episodes) {
      throw std::invalid_argument("abrupt_switch: switch point out of range");
    }
    if (i > 0 && p <= switch_points[i - 1]) {
      throw std::invalid_argument("abrupt_switch: switch points must be strictly increasing");
    }
  }
  std::vector<StepParams> schedule;
  schedule.reserve(static_cast<std::size_t>(num_episodes) * slice_a.horizon());
  std::size_t next_switch = 0;
  bool use_b = false;
  for (int t = 0; t < num_episodes; ++t) {
    if (next_switch < switch_points.size() && switch_points[next_switch] == t) {
      use_b = !use_b;
      ++next_switch;
    }
    const auto& steps = use_b ? slice_b.steps : slice_a.steps;
    schedule.insert(schedule.end(), steps.begin(), steps.end());
  }
  return assemble(slice_a, num_episodes, std::move(schedule));
}

NonStationaryLinearMDP drift(const EpisodeSlice& slice_a, const EpisodeSlice& slice_b,
                             int num_episodes) {
  check_compatible(slice_a, slice_b);
  if (num_episodes < 2) throw std::invalid_argument("drift: K must be >= 2");
  std::vector<StepParams> schedule;
  schedule.reserve(static_cast<std::size_t>(num_episodes) * slice_a.horizon());
  for (int t = 0; t < num_episodes; ++t) {
    const double weight = static_cast<double>(t) / (num_episodes - 1);
    for (int h = 0; h < slice_a.horizon(); ++h) {
      if (t == 0) {
        schedule.push_back(slice_a.steps[h]);
      } else if (t == num_episodes - 1) {
        schedule.push_back(slice_b.steps[h]);
      } else {
        schedule.push_back(blend(slice_a.steps[h], slice_b.steps[h], weight));
      }
    }
  }
  return assemble(slice_a, num_episodes, std::move(schedule));
}

NonStationaryLinearMDP tabular_embedding(const std::vector<TabularEpisode>& episodes,
                                         int num_episodes,
                                         Eigen::VectorXd initial_state_dist) {
  if (episodes.empty() ||
      (episodes.size() != 1 && episodes.size() != static_cast<std::size_t>(num_episodes))) {
    throw std::invalid_argument("tabular_embedding: need 1 or K episode tables");
  }
  if (episodes.size() == 1) {
    return constant_schedule(embed_tabular(episodes.front(), std::move(initial_state_dist)),
                             num_episodes);
  }
  const EpisodeSlice first = embed_tabular(episodes.front(), initial_state_dist);
  std::vector<StepParams> schedule;
  for (const auto& ep : episodes) {
    if (ep.horizon() != first.horizon() || ep.num_states != first.features.num_states ||
        ep.num_actions != first.features.num_actions) {
      throw std::invalid_argument("tabular_embedding: episode tables differ in shape");
    }
    const EpisodeSlice slice = embed_tabular(ep, initial_state_dist);
    schedule.insert(schedule.end(), slice.steps.begin(), slice.steps.end());
  }
  return assemble(first, num_episodes, std::move(schedule));
}

NonStationaryLinearMDP bandit_embedding(const Eigen::MatrixXd& arm_features,
                                        const std::vector<Eigen::VectorXd>& reward_params,
                                        int num_episodes) {
  const int arms = static_cast<int>(arm_features.rows());
  const int d = static_cast<int>(arm_features.cols());
  if (arms < 1 || d < 1) throw std::invalid_argument("bandit_embedding: no arms");
  for (int a = 0; a < arms; ++a) {
    if (arm_features.row(a).norm() > 1.0 + 1e-12) {
      throw std::invalid_argument("bandit_embedding: arm feature norm exceeds 1");
    }
    if (std::abs(arm_features.row(a).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("bandit_embedding: arm features must sum to one");
    }
  }
  if (reward_params.empty() || (reward_params.size() != 1 &&
                                reward_params.size() != static_cast<std::size_t>(num_episodes))) {
    throw std::invalid_argument("bandit_embedding: need 1 or K reward parameters");
  }
  std::vector<StepParams> schedule;
  for (int t = 0; t < num_episodes; ++t) {
    const auto& theta = reward_params.size() == 1 ? reward_params.front() : reward_params[t];
    if (theta.size() != d) throw std::invalid_argument("bandit_embedding: theta size");
    schedule.push_back({theta, Eigen::MatrixXd::Ones(d, 1)});
  }
  return NonStationaryLinearMDP(FeatureMap(1, arms, arm_features), 1, num_episodes,
                                std::move(schedule), Eigen::VectorXd::Ones(1));
}

}  // namespace optwlsvi
