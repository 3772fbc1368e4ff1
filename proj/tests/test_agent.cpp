#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "optwlsvi/agent.hpp"
#include "optwlsvi/env_gen.hpp"

using namespace optwlsvi;
using oracles::LMat;
using oracles::LVec;

TEST(BetaFromTheory, WorkedExample) {
  // iota = ln(2*2*3 / (0.1 * 0.1)) = ln(1200).
  const double beta = beta_from_theory(2, 3, 0.9, 0.1, 1.0);
  EXPECT_NEAR(std::log(1200.0), 7.0901, 1e-4);
  EXPECT_NEAR(beta, 6.0 * std::sqrt(std::log(1200.0)), 1e-12);
  EXPECT_NEAR(beta, 15.976, 1e-3);
}

TEST(BetaFromTheory, UnitLogTermAndLinearInC) {
  const double delta = 0.9;
  const double eta = 1.0 - 2.0 / (std::exp(1.0) * delta);  // 2dH / (delta (1 - eta)) = e
  EXPECT_NEAR(beta_from_theory(1, 1, eta, delta, 1.7), 1.7, 1e-12);
  EXPECT_DOUBLE_EQ(beta_from_theory(3, 4, 0.95, 0.1, 2.0), 2.0 * beta_from_theory(3, 4, 0.95, 0.1, 1.0));
}

TEST(BetaFromTheory, RejectsEtaOneAndBadArguments) {
  EXPECT_THROW(beta_from_theory(2, 3, 1.0, 0.1, 1.0), std::invalid_argument);
  EXPECT_THROW(beta_from_theory(2, 3, 0.9, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(beta_from_theory(2, 3, 0.9, 0.1, 0.0), std::invalid_argument);
}

TEST(EtaFromBudget, WorkedExamples) {
  EXPECT_NEAR(eta_from_budget(2.0 * 1000, 2, 1000), std::exp(-1.0), 1e-15);
  const double log_inv = std::pow(2000.0, -2.0 / 3.0);
  EXPECT_NEAR(log_inv, 0.006300, 1e-6);
  EXPECT_NEAR(eta_from_budget(1.0, 2, 1000), 0.993720, 1e-6);
  EXPECT_EQ(eta_from_budget(1e-300, 2, 1000), 1.0 - 1e-12);
  EXPECT_EQ(eta_from_budget(1e30, 1, 1), 1e-6);
  EXPECT_THROW(eta_from_budget(0.0, 2, 10), std::invalid_argument);
}

TEST(ResolveBeta, ExplicitOverridesTheory) {
  AgentConfig cfg;
  cfg.eta = 0.9;
  cfg.beta = 0.25;
  EXPECT_EQ(resolve_beta(cfg, 4, 3), 0.25);
  cfg.beta.reset();
  EXPECT_EQ(resolve_beta(cfg, 4, 3), beta_from_theory(4, 3, 0.9, 0.1, 1.0));
}

TEST(PolicySnapshot, TieBreakTakesLowestIndex) {
  Eigen::MatrixXd q(2, 3);
  q << 0.1, 0.7, 0.7, 0.0, 0.0, 0.0;
  const PolicySnapshot snap(2, 3, 1.0, 0.0, {Eigen::VectorXd::Zero(1)}, {q});
  EXPECT_EQ(snap.act(0, 0), 1);
  EXPECT_EQ(snap.act(0, 1), 0);
  EXPECT_DOUBLE_EQ(snap.value(0, 0), 0.7);
}

TEST(PolicySnapshot, ValueClippedAboveNotBelow) {
  Eigen::MatrixXd q(2, 2);
  q << 5.0, 1.0, -0.5, -0.75;
  const PolicySnapshot snap(2, 2, 2.0, 0.0, {Eigen::VectorXd::Zero(1)}, {q});
  EXPECT_EQ(snap.value(0, 0), 2.0);
  EXPECT_EQ(snap.value(0, 1), -0.5);
}

TEST(PlanEpisode, FreshStateIsPureBonus) {
  Rng rng(1);
  const auto slice = make_mixture_slice(rng, 3, 2, 4, 2);
  AgentConfig cfg;
  cfg.eta = 0.9;
  cfg.beta = 0.8;
  const OptWlsviAgent agent(cfg, 4, 2);
  const PolicySnapshot snap = agent.plan(slice.features);
  for (int h = 0; h < 2; ++h) {
    EXPECT_EQ(snap.weights(h), Eigen::VectorXd::Zero(4));
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        EXPECT_NEAR(snap.q_value(h, s, a), 0.8 * slice.features.phi(s, a).norm(), 1e-15);
      }
    }
  }
}

TEST(PlanEpisode, ZeroWeightsZeroBetaPicksActionZero) {
  Rng rng(2);
  const auto slice = make_mixture_slice(rng, 2, 3, 3, 1);
  AgentConfig cfg;
  cfg.beta = 0.0;
  const OptWlsviAgent agent(cfg, 3, 1);
  const auto snap = agent.plan(slice.features);
  EXPECT_EQ(snap.act(0, 0), 0);
  EXPECT_EQ(snap.act(0, 1), 0);
}

TEST(PlanEpisode, ActEqualsBruteForceMaxOverActions) {
  Rng env_rng(3);
  const auto mdp = constant_schedule(make_mixture_slice(env_rng, 4, 3, 5, 3), 30);
  AgentConfig cfg;
  cfg.eta = 0.95;
  cfg.beta = 0.3;
  OptWlsviAgent agent(cfg, 5, 3);
  Rng rng(4);
  for (int t = 0; t < 30; ++t) agent.run_episode(mdp, rng, t);
  const auto snap = agent.plan(mdp.features());
  const GramFactord factor(agent.grams()[1]);
  for (int s = 0; s < 4; ++s) {
    int best = 0;
    double best_q = -INFINITY;
    for (int a = 0; a < 3; ++a) {
      const Eigen::VectorXd phi = mdp.features().phi(s, a);
      const double q = phi.dot(snap.weights(1)) + factor.bonus(phi, 0.3);
      EXPECT_NEAR(q, snap.q_value(1, s, a), 1e-12);
      if (q > best_q) {
        best_q = q;
        best = a;
      }
    }
    EXPECT_EQ(snap.act(1, s), best);
  }
}

TEST(RunEpisode, ForcedTrajectoryWithOneAction) {
  const Eigen::MatrixXd arms = Eigen::MatrixXd::Identity(1, 1);
  const auto mdp = bandit_embedding(arms, {Eigen::VectorXd::Constant(1, 0.3)}, 5);
  AgentConfig cfg;
  cfg.eta = 0.5;
  OptWlsviAgent agent(cfg, 1, 1);
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto out = agent.run_episode(mdp, rng, t);
    ASSERT_EQ(out.steps.size(), 1u);
    EXPECT_EQ(out.steps[0].action, 0);
    EXPECT_EQ(out.realized_return, 0.3);
  }
}

TEST(RunEpisode, BookkeepingAfterKEpisodes) {
  Rng env_rng(6);
  const auto mdp = constant_schedule(make_mixture_slice(env_rng, 3, 2, 4, 3), 12);
  AgentConfig cfg;
  cfg.eta = 0.9;
  OptWlsviAgent agent(cfg, 4, 3);
  Rng rng(7);
  for (int t = 0; t < 12; ++t) {
    const auto out = agent.run_episode(mdp, rng, t);
    double total = 0.0;
    for (const auto& st : out.steps) total += st.reward;
    EXPECT_EQ(out.realized_return, total);
    for (std::size_t h = 0; h + 1 < out.steps.size(); ++h) {
      EXPECT_EQ(out.steps[h].next_state, out.steps[h + 1].state);
    }
  }
  for (int h = 0; h < 3; ++h) {
    EXPECT_EQ(agent.histories()[h].size(), 12u);
    EXPECT_EQ(agent.grams()[h].count(), 12);
  }
}

TEST(RunEpisode, DeterministicReplay) {
  Rng env_rng(8);
  const auto mdp = constant_schedule(make_mixture_slice(env_rng, 3, 3, 4, 2), 25);
  auto replay = [&] {
    AgentConfig cfg;
    cfg.eta = 0.97;
    OptWlsviAgent agent(cfg, 4, 2);
    Rng rng(9);
    std::vector<EpisodeOutcome> outs;
    for (int t = 0; t < 25; ++t) outs.push_back(agent.run_episode(mdp, rng, t));
    return outs;
  };
  const auto a = replay();
  const auto b = replay();
  for (int t = 0; t < 25; ++t) {
    ASSERT_EQ(a[t].steps.size(), b[t].steps.size());
    for (std::size_t h = 0; h < a[t].steps.size(); ++h) {
      EXPECT_EQ(a[t].steps[h].state, b[t].steps[h].state);
      EXPECT_EQ(a[t].steps[h].action, b[t].steps[h].action);
      EXPECT_EQ(a[t].steps[h].next_state, b[t].steps[h].next_state);
    }
    EXPECT_EQ(a[t].estimated_value, b[t].estimated_value);
    EXPECT_EQ(a[t].policy, b[t].policy);
  }
}

TEST(RunEpisode, RejectsShapeMismatch) {
  Rng env_rng(10);
  const auto mdp = constant_schedule(make_mixture_slice(env_rng, 3, 2, 4, 2), 3);
  AgentConfig cfg;
  cfg.beta = 1.0;
  OptWlsviAgent wrong_dim(cfg, 3, 2);
  OptWlsviAgent wrong_h(cfg, 4, 3);
  Rng rng(1);
  EXPECT_THROW(wrong_dim.run_episode(mdp, rng, 0), std::invalid_argument);
  EXPECT_THROW(wrong_h.run_episode(mdp, rng, 0), std::invalid_argument);
}

namespace {

// Discounted LinUCB written against the unrescaled weights eta^-s, in long
// double with explicit inverses.
class DiscountedLinUcb {
 public:
  DiscountedLinUcb(int d, long double eta, long double lambda, long double beta)
      : d_(d), eta_(eta), lambda_(lambda), beta_(beta) {}

  int choose(const Eigen::MatrixXd& arms, LVec* estimate) const {
    const int n = static_cast<int>(xs_.size());
    LMat v = lambda_ * std::pow(eta_, -static_cast<long double>(n)) * LMat::Identity(d_, d_);
    LMat vt = lambda_ * std::pow(eta_, -2.0L * n) * LMat::Identity(d_, d_);
    LVec b = LVec::Zero(d_);
    for (int s = 0; s < n; ++s) {
      const long double w = std::pow(eta_, -static_cast<long double>(s + 1));
      v += w * xs_[s] * xs_[s].transpose();
      vt += w * w * xs_[s] * xs_[s].transpose();
      b += w * xs_[s] * ys_[s];
    }
    const LMat inv = v.inverse();
    const LVec theta = inv * b;
    if (estimate) *estimate = theta;
    int best = 0;
    long double best_score = -INFINITY;
    for (int a = 0; a < arms.rows(); ++a) {
      const LVec x = arms.row(a).transpose().cast<long double>();
      const long double score = x.dot(theta) + beta_ * std::sqrt(x.dot(inv * vt * inv * x));
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    return best;
  }

  void observe(const Eigen::VectorXd& x, double y) {
    xs_.push_back(x.cast<long double>());
    ys_.push_back(y);
  }

 private:
  int d_;
  long double eta_, lambda_, beta_;
  std::vector<LVec> xs_;
  std::vector<long double> ys_;
};

}  // namespace

TEST(Reduction, SingleStepMatchesDiscountedLinUcb) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const int d = 3, arms_n = 5, K = 40;
    Eigen::MatrixXd arms(arms_n, d);
    for (int a = 0; a < arms_n; ++a) arms.row(a) = sample_simplex(rng, d).transpose();
    std::vector<Eigen::VectorXd> thetas;
    for (int t = 0; t < K; ++t) {
      Eigen::VectorXd theta(d);
      for (int i = 0; i < d; ++i) theta(i) = uniform01(rng);
      thetas.push_back(theta);
    }
    const auto mdp = bandit_embedding(arms, thetas, K);
    AgentConfig cfg;
    cfg.eta = 0.9;
    cfg.lambda = 0.7;
    cfg.beta = 0.4;
    OptWlsviAgent agent(cfg, d, 1);
    DiscountedLinUcb ref(d, 0.9L, 0.7L, 0.4L);
    Rng run_rng(seed + 100);
    for (int t = 0; t < K; ++t) {
      LVec ref_theta;
      const int ref_action = ref.choose(arms, &ref_theta);
      const auto snap = agent.plan(mdp.features());
      EXPECT_LE((snap.weights(0).cast<long double>() - ref_theta).norm(), 1e-10L);
      const auto out = agent.run_episode(mdp, run_rng, t);
      ASSERT_EQ(out.steps[0].action, ref_action) << "seed " << seed << " t " << t;
      ref.observe(arms.row(ref_action).transpose(), out.steps[0].reward);
    }
  }
}

namespace {

// Stationary LSVI-UCB: unweighted ridge regression per step with bonus
// beta sqrt(phi^T Lambda^-1 phi) and values capped at H.
struct LsviUcbReference {
  int d, H;
  long double lambda, beta;
  std::vector<std::vector<LVec>> phis;
  std::vector<std::vector<long double>> rewards;
  std::vector<std::vector<int>> next;

  LsviUcbReference(int d_, int H_, long double lambda_, long double beta_)
      : d(d_), H(H_), lambda(lambda_), beta(beta_), phis(H_), rewards(H_), next(H_) {}

  // q[h](s, a)
  std::vector<LMat> plan(const FeatureMap& fm) const {
    const int S = fm.num_states, A = fm.num_actions;
    std::vector<LMat> q(H, LMat(S, A));
    LVec v_next = LVec::Zero(S);
    for (int h = H - 1; h >= 0; --h) {
      LMat gram = lambda * LMat::Identity(d, d);
      LVec b = LVec::Zero(d);
      for (std::size_t k = 0; k < phis[h].size(); ++k) {
        gram += phis[h][k] * phis[h][k].transpose();
        b += phis[h][k] * (rewards[h][k] + v_next(next[h][k]));
      }
      const LMat inv = gram.inverse();
      const LVec w = inv * b;
      LVec v(S);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const LVec x = fm.phi(s, a).cast<long double>();
          q[h](s, a) = x.dot(w) + beta * std::sqrt(x.dot(inv * x));
        }
        v(s) = std::min(q[h].row(s).maxCoeff(), static_cast<long double>(H));
      }
      v_next = v;
    }
    return q;
  }
};

int first_argmax(const LMat& q, int s) {
  int best = 0;
  for (int a = 1; a < q.cols(); ++a) {
    if (q(s, a) > q(s, best)) best = a;
  }
  return best;
}

}  // namespace

TEST(Reduction, EtaOneMatchesUnweightedLsviUcb) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng env_rng(seed + 20);
    const int S = 4, A = 3, d = 5, H = 3, K = 60;
    const auto mdp = constant_schedule(make_mixture_slice(env_rng, S, A, d, H), K);
    AgentConfig cfg;
    cfg.eta = 1.0;
    cfg.lambda = 1.0;
    cfg.beta = 0.5;
    OptWlsviAgent agent(cfg, d, H);
    LsviUcbReference ref(d, H, 1.0L, 0.5L);

    Rng agent_rng(seed), ref_rng(seed);
    for (int t = 0; t < K; ++t) {
      const auto q = ref.plan(mdp.features());
      const auto out = agent.run_episode(mdp, agent_rng, t);
      int s = sample_initial_state(mdp, ref_rng);
      for (int h = 0; h < H; ++h) {
        const int a = first_argmax(q[h], s);
        ASSERT_EQ(out.steps[h].state, s);
        ASSERT_EQ(out.steps[h].action, a) << "seed " << seed << " t " << t << " h " << h;
        const double r = reward(mdp, t, h, s, a);
        const int sp = sample_next_state(mdp, ref_rng, t, h, s, a);
        ref.phis[h].push_back(mdp.features().phi(s, a).cast<long double>());
        ref.rewards[h].push_back(r);
        ref.next[h].push_back(sp);
        s = sp;
      }
    }
  }
}

TEST(Invariants, WeightAndBonusBoundsHoldOverLongRuns) {
  for (double eta : {0.5, 0.9, 0.99, 1.0}) {
    Rng env_rng(30);
    const auto mdp = constant_schedule(make_mixture_slice(env_rng, 4, 3, 4, 3), 150);
    AgentConfig cfg;
    cfg.eta = eta;
    cfg.lambda = 0.3;
    cfg.beta = 1.0;
    OptWlsviAgent agent(cfg, 4, 3);
    Rng rng(31);
    for (int t = 0; t < 150; ++t) {
      const auto out = agent.run_episode(mdp, rng, t);
      const double bound = weight_norm_bound(4, 3, eta, 0.3, t);
      EXPECT_LE(out.max_weight_norm, bound * (1 + 1e-9) + 1e-9);
      EXPECT_LE(out.estimated_value, 3.0);
      EXPECT_GE(out.negative_values, 0);
    }
  }
}
