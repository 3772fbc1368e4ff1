#include "optwlsvi/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optwlsvi {

namespace {

constexpr double kBoundSlack = 1e-9;

}  // namespace

double beta_from_theory(int dim, int horizon, double eta, double delta, double c) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("beta_from_theory: eta must lie in (0, 1)");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("beta_from_theory: delta must lie in (0, 1)");
  }
  if (!(c > 0.0)) throw std::invalid_argument("beta_from_theory: c must be > 0");
  const double iota = std::log(2.0 * dim * horizon / (delta * (1.0 - eta)));
  return c * dim * horizon * std::sqrt(iota);
}

double eta_from_budget(double budget, int dim, int num_episodes) {
  if (!(budget > 0.0)) {
    throw std::invalid_argument("eta_from_budget: budget must be > 0 (use eta = 1)");
  }
  if (dim < 1 || num_episodes < 1) {
    throw std::invalid_argument("eta_from_budget: d and K must be positive");
  }
  const double log_inv_eta =
      std::pow(budget / (static_cast<double>(dim) * num_episodes), 2.0 / 3.0);
  return std::clamp(std::exp(-log_inv_eta), 1e-6, 1.0 - 1e-12);
}

double resolve_beta(const AgentConfig& config, int dim, int horizon) {
  if (config.beta) {
    if (*config.beta < 0.0) throw std::invalid_argument("beta must be >= 0");
    return *config.beta;
  }
  return beta_from_theory(dim, horizon, config.eta, config.delta, config.c_abs);
}

PolicySnapshot::PolicySnapshot(int num_states, int num_actions, double clip, double beta,
                               std::vector<Eigen::VectorXd> weights,
                               std::vector<Eigen::MatrixXd> q_tables)
    : num_states_(num_states),
      num_actions_(num_actions),
      clip_(clip),
      beta_(beta),
      weights_(std::move(weights)),
      q_tables_(std::move(q_tables)) {
  if (weights_.size() != q_tables_.size()) {
    throw std::invalid_argument("PolicySnapshot: weights and Q tables differ in length");
  }
}

double PolicySnapshot::value(int h, int s) const {
  return std::min(q_tables_.at(h).row(s).maxCoeff(), clip_);
}

int PolicySnapshot::act(int h, int s) const {
  Eigen::Index best = 0;
  q_tables_.at(h).row(s).maxCoeff(&best);  // first maximizer
  return static_cast<int>(best);
}

Policy PolicySnapshot::greedy_policy() const {
  Policy policy(q_tables_.size(), std::vector<int>(static_cast<std::size_t>(num_states_)));
  for (int h = 0; h < horizon(); ++h) {
    for (int s = 0; s < num_states_; ++s) policy[h][s] = act(h, s);
  }
  return policy;
}

PolicySnapshot plan_episode(const std::vector<History>& histories,
                            const std::vector<GramState>& grams, double beta,
                            const FeatureMap& features, PlanDiagnostics* diagnostics) {
  const int H = static_cast<int>(grams.size());
  if (H < 1 || histories.size() != grams.size()) {
    throw std::invalid_argument("plan_episode: need one history and Gram state per step");
  }
  const int S = features.num_states;
  const int A = features.num_actions;
  const double clip = static_cast<double>(H);

  std::vector<Eigen::VectorXd> weights(static_cast<std::size_t>(H));
  std::vector<Eigen::MatrixXd> q_tables(static_cast<std::size_t>(H));
  Eigen::VectorXd next_values = Eigen::VectorXd::Zero(S);  // V_H = 0
  PlanDiagnostics diag;

  for (int h = H - 1; h >= 0; --h) {
    const GramState& gram = grams[h];
    if (gram.dim() != features.dim()) {
      throw std::invalid_argument("plan_episode: Gram dimension differs from features");
    }
    const GramFactord factor(gram);
    Eigen::VectorXd w =
        wls_solve(factor, gram, histories[h], [&](int s) { return next_values(s); });

    const double w_norm = w.norm();
    const double w_bound = weight_norm_bound(gram.dim(), H, gram.eta(), gram.lambda(),
                                             gram.count());
    if (w_norm > w_bound * (1.0 + kBoundSlack) + kBoundSlack) {
      throw NumericalFault("weight norm " + std::to_string(w_norm) +
                           " exceeds iterate bound " + std::to_string(w_bound));
    }
    diag.max_weight_norm = std::max(diag.max_weight_norm, w_norm);

    const double bonus_cap = beta / std::sqrt(gram.lambda());
    const Eigen::VectorXd linear = features.table * w;
    const Eigen::MatrixXd projected = features.table * factor.bonus_form();
    Eigen::MatrixXd q(S, A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const auto row = features.row_index(s, a);
        const double quad = std::max(0.0, projected.row(row).dot(features.table.row(row)));
        const double b = beta * std::sqrt(quad);
        if (b > bonus_cap * (1.0 + kBoundSlack) + kBoundSlack) {
          throw NumericalFault("bonus exceeds beta / sqrt(lambda)");
        }
        q(s, a) = linear(row) + b;
      }
    }

    Eigen::VectorXd values(S);
    for (int s = 0; s < S; ++s) {
      values(s) = std::min(q.row(s).maxCoeff(), clip);
      if (values(s) < 0.0) ++diag.negative_values;
      if (values(s) < -clip - kBoundSlack) {
        throw NumericalFault("value estimate below -H");
      }
    }
    weights[h] = std::move(w);
    q_tables[h] = std::move(q);
    next_values = std::move(values);
  }
  if (diagnostics) *diagnostics = diag;
  return PolicySnapshot(S, A, clip, beta, std::move(weights), std::move(q_tables));
}

OptWlsviAgent::OptWlsviAgent(const AgentConfig& config, int dim, int horizon)
    : config_(config), beta_(resolve_beta(config, dim, horizon)) {
  if (horizon < 1) throw std::invalid_argument("OptWlsviAgent: horizon must be >= 1");
  histories_.resize(static_cast<std::size_t>(horizon));
  grams_.assign(static_cast<std::size_t>(horizon), GramState(dim, config.eta, config.lambda));
}

PolicySnapshot OptWlsviAgent::plan(const FeatureMap& features,
                                   PlanDiagnostics* diagnostics) const {
  return plan_episode(histories_, grams_, beta_, features, diagnostics);
}

EpisodeOutcome OptWlsviAgent::run_episode(const NonStationaryLinearMDP& mdp, Rng& rng,
                                          int t) {
  if (mdp.horizon() != static_cast<int>(grams_.size()) || mdp.dim() != grams_[0].dim()) {
    throw std::invalid_argument("OptWlsviAgent: environment shape mismatch");
  }
  const FeatureMap& features = mdp.features();
  PlanDiagnostics diag;
  const PolicySnapshot snapshot = plan(features, &diag);

  EpisodeOutcome out;
  out.t = t;
  out.steps = rollout(mdp, rng, t, [&](int h, int s) { return snapshot.act(h, s); });
  out.policy = snapshot.greedy_policy();
  out.estimated_value = snapshot.value(0, out.steps.front().state);
  out.negative_values = diag.negative_values;
  out.max_weight_norm = diag.max_weight_norm;

  for (int h = 0; h < mdp.horizon(); ++h) {
    const StepTransition& st = out.steps[h];
    Eigen::VectorXd phi = features.phi(st.state, st.action);
    grams_[h].update(phi);
    histories_[h].push_back({std::move(phi), st.reward, st.next_state});
    out.realized_return += st.reward;
  }
  return out;
}

}  // namespace optwlsvi
