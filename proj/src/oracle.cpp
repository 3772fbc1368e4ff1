#include "optwlsvi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optwlsvi {

TabularEpisode tabulate(const NonStationaryLinearMDP& mdp, int t) {
  TabularEpisode ep;
  ep.num_states = mdp.num_states();
  ep.num_actions = mdp.num_actions();
  for (int h = 0; h < mdp.horizon(); ++h) {
    Eigen::MatrixXd r(ep.num_states, ep.num_actions);
    Eigen::MatrixXd p(static_cast<Eigen::Index>(ep.num_states) * ep.num_actions,
                      ep.num_states);
    for (int s = 0; s < ep.num_states; ++s) {
      for (int a = 0; a < ep.num_actions; ++a) {
        r(s, a) = reward(mdp, t, h, s, a);
        p.row(mdp.features().row_index(s, a)) = transition_probs(mdp, t, h, s, a).transpose();
      }
    }
    ep.reward.push_back(std::move(r));
    ep.transition.push_back(std::move(p));
  }
  return ep;
}

namespace {

// Q_h = r_h + P_h V_{h+1}, reshaped to |S| x |A|.
Eigen::MatrixXd bellman_q(const TabularEpisode& ep, int h, const Eigen::VectorXd& next) {
  const Eigen::VectorXd expected = ep.transition[h] * next;
  Eigen::MatrixXd q = ep.reward[h];
  for (int s = 0; s < ep.num_states; ++s) {
    for (int a = 0; a < ep.num_actions; ++a) {
      q(s, a) += expected(static_cast<Eigen::Index>(s) * ep.num_actions + a);
    }
  }
  return q;
}

template <typename Select>
ValueTable backward_induction(const TabularEpisode& ep, Select&& select) {
  const int H = ep.horizon();
  ValueTable table;
  table.values.assign(static_cast<std::size_t>(H) + 1, Eigen::VectorXd::Zero(ep.num_states));
  table.q.resize(static_cast<std::size_t>(H));
  for (int h = H - 1; h >= 0; --h) {
    table.q[h] = bellman_q(ep, h, table.values[h + 1]);
    for (int s = 0; s < ep.num_states; ++s) table.values[h](s) = select(table.q[h], h, s);
  }
  return table;
}

}  // namespace

ValueTable optimal_values(const TabularEpisode& episode) {
  return backward_induction(episode, [](const Eigen::MatrixXd& q, int, int s) {
    return q.row(s).maxCoeff();
  });
}

ValueTable optimal_values(const NonStationaryLinearMDP& mdp, int t) {
  ValueTable table = optimal_values(tabulate(mdp, t));
  table.t = t;
  return table;
}

ValueTable policy_values(const TabularEpisode& episode, const Policy& policy) {
  if (static_cast<int>(policy.size()) != episode.horizon()) {
    throw std::invalid_argument("policy_values: policy must cover every step");
  }
  for (const auto& row : policy) {
    if (static_cast<int>(row.size()) != episode.num_states) {
      throw std::invalid_argument("policy_values: policy must cover every state");
    }
    for (int a : row) {
      if (a < 0 || a >= episode.num_actions) {
        throw std::invalid_argument("policy_values: action out of range");
      }
    }
  }
  return backward_induction(episode, [&](const Eigen::MatrixXd& q, int h, int s) {
    return q(s, policy[h][s]);
  });
}

ValueTable policy_values(const NonStationaryLinearMDP& mdp, int t, const Policy& policy) {
  ValueTable table = policy_values(tabulate(mdp, t), policy);
  table.t = t;
  return table;
}

Policy greedy_policy(const ValueTable& table) {
  Policy policy;
  for (const auto& q : table.q) {
    std::vector<int> row(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
      Eigen::Index best = 0;
      q.row(s).maxCoeff(&best);
      row[s] = static_cast<int>(best);
    }
    policy.push_back(std::move(row));
  }
  return policy;
}

double linear_q_residual(const NonStationaryLinearMDP& mdp, int t, const ValueTable& table) {
  if (static_cast<int>(table.q.size()) != mdp.horizon() ||
      table.values.size() != table.q.size() + 1) {
    throw std::invalid_argument("linear_q_residual: value table horizon mismatch");
  }
  const FeatureMap& fm = mdp.features();
  double worst = 0.0;
  for (int h = 0; h < mdp.horizon(); ++h) {
    const StepParams& p = mdp.params(t, h);
    const Eigen::VectorXd w = p.theta + p.measure * table.values[h + 1];
    const Eigen::VectorXd linear = fm.table * w;
    for (int s = 0; s < mdp.num_states(); ++s) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        worst = std::max(worst, std::abs(table.q[h](s, a) - linear(fm.row_index(s, a))));
      }
    }
  }
  return worst;
}

double linear_q_check(const NonStationaryLinearMDP& mdp, int t, const Policy& policy) {
  return linear_q_residual(mdp, t, policy_values(mdp, t, policy));
}

WeightedAverageStep weighted_average_step(const NonStationaryLinearMDP& mdp,
                                          const History& history, const GramState& gram,
                                          int t, int h) {
  if (static_cast<int>(history.size()) != t || gram.count() != t) {
    throw std::invalid_argument("weighted_average_step: history must hold t records");
  }
  const int d = mdp.dim();
  Eigen::VectorXd theta_acc = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd measure_acc = Eigen::MatrixXd::Zero(d, mdp.num_states());
  for (int tau = 0; tau < t; ++tau) {
    const Eigen::VectorXd& phi = history[tau].phi;
    const StepParams& p = mdp.params(tau, h);
    theta_acc *= gram.eta();
    theta_acc.noalias() += phi * phi.dot(p.theta);
    measure_acc *= gram.eta();
    measure_acc.noalias() += phi * (phi.transpose() * p.measure);
  }
  const StepParams& current = mdp.params(t, h);
  theta_acc += gram.lambda() * current.theta;
  measure_acc += gram.lambda() * current.measure;

  const GramFactord factor(gram);
  const Eigen::VectorXd theta_bar = factor.solve(theta_acc);
  const Eigen::MatrixXd measure_bar = factor.solve(measure_acc);

  const FeatureMap& fm = mdp.features();
  WeightedAverageStep out;
  const Eigen::VectorXd r = fm.table * theta_bar;
  out.bar_reward = r.reshaped<Eigen::RowMajor>(mdp.num_states(), mdp.num_actions());
  out.bar_transition = fm.table * measure_bar;
  return out;
}

BiasBounds bias_bounds(const NonStationaryLinearMDP& mdp, int t, int h, int window,
                       double eta, double lambda) {
  if (window < 1 || window > t) {
    throw std::invalid_argument("bias_bounds: window must lie in [1, t]");
  }
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("bias_bounds: eta must lie in (0, 1)");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("bias_bounds: lambda must be > 0");
  BiasBounds b;
  for (int s = t - window; s < t; ++s) {
    const StepParams& cur = mdp.params(s, h);
    const StepParams& next = mdp.params(s + 1, h);
    b.reward += (cur.theta - next.theta).norm();
    b.transition += (cur.total_mass() - next.total_mass()).norm();
  }
  const double tail = 2.0 * std::sqrt(static_cast<double>(mdp.dim())) *
                      std::pow(eta, window) / (lambda * (1.0 - eta));
  b.reward += tail;
  b.transition += tail * mdp.horizon();
  b.total = b.reward + 2.0 * b.transition;
  return b;
}

double episode_regret(const NonStationaryLinearMDP& mdp, const ExecutedEpisode& episode) {
  const TabularEpisode tab = tabulate(mdp, episode.t);
  const ValueTable best = optimal_values(tab);
  const ValueTable played = policy_values(tab, episode.policy);
  const double gap =
      best.values[0](episode.initial_state) - played.values[0](episode.initial_state);
  if (gap < -1e-9) {
    throw std::logic_error("dynamic_regret: policy value exceeds the optimum");
  }
  return std::max(gap, 0.0);
}

RegretSeries dynamic_regret(const NonStationaryLinearMDP& mdp,
                            const std::vector<ExecutedEpisode>& episodes) {
  RegretSeries series;
  double total = 0.0;
  for (const auto& ep : episodes) {
    const double r = episode_regret(mdp, ep);
    total += r;
    series.per_episode.push_back(r);
    series.cumulative.push_back(total);
  }
  return series;
}

EpisodeOutcome OracleAgent::run_episode(const NonStationaryLinearMDP& mdp, Rng& rng,
                                        int t) {
  const ValueTable best = optimal_values(mdp, t);
  EpisodeOutcome out;
  out.t = t;
  out.policy = greedy_policy(best);
  out.steps = rollout(mdp, rng, t, [&](int h, int s) { return out.policy[h][s]; });
  for (const auto& st : out.steps) out.realized_return += st.reward;
  out.estimated_value = best.values[0](out.steps.front().state);
  return out;
}

}  // namespace optwlsvi
