#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "optwlsvi/wls_core.hpp"

using namespace optwlsvi;

namespace {

struct Stream {
  std::vector<Eigen::VectorXd> phis;
  std::vector<double> rewards;
  std::vector<int> next_states;
};

Stream random_stream(Rng& rng, int d, int length, int num_states) {
  Stream s;
  for (int k = 0; k < length; ++k) {
    s.phis.push_back(oracles::unit_ball(rng, d));
    s.rewards.push_back(uniform01(rng));
    s.next_states.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(num_states)));
  }
  return s;
}

GramState absorb(const Stream& s, int d, double eta, double lambda, History* history = nullptr) {
  GramState g(d, eta, lambda);
  for (std::size_t k = 0; k < s.phis.size(); ++k) {
    g.update(s.phis[k]);
    if (history) history->push_back({s.phis[k], s.rewards[k], s.next_states[k]});
  }
  return g;
}

}  // namespace

TEST(GramInit, RejectsInvalidParameters) {
  EXPECT_THROW(GramState(0, 0.9, 1.0), std::invalid_argument);
  EXPECT_THROW(GramState(2, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(GramState(2, 1.1, 1.0), std::invalid_argument);
  EXPECT_THROW(GramState(2, 0.9, 0.0), std::invalid_argument);
}

TEST(GramInit, FreshStateIsRegularizerOnly) {
  const GramState g(3, 0.9, 1.0);
  EXPECT_EQ(g.count(), 0);
  EXPECT_EQ(g.data(), Eigen::MatrixXd::Zero(3, 3));
  const GramState scalar(1, 1.0, 0.5);
  EXPECT_EQ(scalar.regularized()(0, 0), 0.5);
}

TEST(GramUpdate, SingleAndRepeatedUnitVector) {
  GramState g(3, 0.9, 1.0);
  const Eigen::Vector3d e1(1, 0, 0);
  g.update(e1);
  EXPECT_EQ(g.data(), e1 * e1.transpose());
  EXPECT_EQ(g.regularized().diagonal(), Eigen::Vector3d(2, 1, 1));
  g.update(e1);
  EXPECT_NEAR(g.data()(0, 0), 1.9, 1e-15);
  EXPECT_NEAR(g.data_tilde()(0, 0), 1.81, 1e-15);
  EXPECT_EQ(g.count(), 2);
}

TEST(GramUpdate, RejectsLongFeatureAndWrongSize) {
  GramState g(2, 0.9, 1.0);
  EXPECT_THROW(g.update(Eigen::Vector2d(1.0, 0.1)), std::invalid_argument);
  EXPECT_THROW(g.update(Eigen::Vector3d(1.0, 0.0, 0.0)), std::invalid_argument);
  EXPECT_NO_THROW(g.update(Eigen::Vector2d(1.0 + 5e-10, 0.0)));
}

TEST(GramUpdate, RescaledMatchesDirectFormulaForShortStreams) {
  Rng rng(1);
  for (int t = 1; t <= 30; ++t) {
    const Stream s = random_stream(rng, 4, t - 1, 3);
    const GramState g = absorb(s, 4, 0.9, 1.0);
    const auto direct = oracles::direct_gram(s.phis, 4, 0.9L, 1.0L);
    const long double scale = std::pow(0.9L, static_cast<long double>(t - 1));
    const oracles::LMat rescaled = scale * direct.sigma;
    const oracles::LMat rescaled_tilde = scale * scale * direct.sigma_tilde;
    EXPECT_LE((rescaled - g.regularized().cast<long double>()).cwiseAbs().maxCoeff(), 1e-10L);
    EXPECT_LE((rescaled_tilde - g.regularized_tilde().cast<long double>()).cwiseAbs().maxCoeff(),
              1e-10L);
  }
}

TEST(GramState, StaysSymmetricPositiveSemidefinite) {
  Rng rng(2);
  const Stream s = random_stream(rng, 5, 300, 2);
  const GramState g = absorb(s, 5, 0.97, 1.0);
  for (const Eigen::MatrixXd& m : {g.data(), g.data_tilde()}) {
    EXPECT_EQ(m, m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(UnrescaledPair, KnownValues) {
  const GramState fresh(2, 0.5, 1.0);
  const auto [sigma0, tilde0] = fresh.unrescaled_pair();
  EXPECT_EQ(sigma0, Eigen::Matrix2d::Identity());
  EXPECT_EQ(tilde0, Eigen::Matrix2d::Identity());

  GramState g(2, 0.5, 1.0);
  g.update(Eigen::Vector2d(1, 0));
  const auto [sigma, tilde] = g.unrescaled_pair();
  Eigen::Matrix2d expected;
  expected << 4, 0, 0, 2;
  EXPECT_EQ(sigma, expected);

  GramState flat(2, 1.0, 1.0);
  for (int i = 0; i < 5; ++i) flat.update(Eigen::Vector2d(0.6, 0.8));
  EXPECT_EQ(flat.unrescaled_pair().first, flat.regularized());
}

TEST(UnrescaledPair, OverflowGuard) {
  GramState g(1, 0.5, 1.0);
  for (int i = 0; i < 600; ++i) g.update(Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_THROW(g.unrescaled_pair(), std::overflow_error);
}

TEST(WlsSolve, EmptyHistoryGivesZero) {
  const GramState g(3, 0.9, 1.0);
  const History h;
  EXPECT_EQ(wls_solve(g, h, [](int) { return 0.0; }), Eigen::Vector3d::Zero());
}

TEST(WlsSolve, OneSampleClosedForm) {
  for (double eta : {0.3, 0.9, 1.0}) {
    GramState g(2, eta, 1.0);
    const Eigen::Vector2d e1(1, 0);
    g.update(e1);
    const History h{{e1, 1.0, 0}};
    const Eigen::VectorXd w = wls_solve(g, h, [](int) { return 0.0; });
    EXPECT_NEAR(w(0), 0.5, 1e-15);
    EXPECT_NEAR(w(1), 0.0, 1e-15);
  }
}

TEST(WlsSolve, RejectsMismatchedHistory) {
  GramState g(2, 0.9, 1.0);
  g.update(Eigen::Vector2d(1, 0));
  const History empty;
  EXPECT_THROW(wls_solve(g, empty, [](int) { return 0.0; }), std::invalid_argument);
}

TEST(WlsSolve, MatchesExtendedPrecisionClosedForm) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 6);
    const int t = 1 + static_cast<int>(rng() % 50);
    const double eta = std::array{0.5, 0.9, 0.99, 1.0}[rng() % 4];
    const Stream s = random_stream(rng, d, t - 1, 4);
    Eigen::Vector4d values;
    for (int i = 0; i < 4; ++i) values(i) = 3.0 * uniform01(rng);
    History history;
    const GramState g = absorb(s, d, eta, 1.0, &history);
    const Eigen::VectorXd w = wls_solve(g, history, [&](int sp) { return values(sp); });

    std::vector<double> targets;
    for (std::size_t k = 0; k < s.phis.size(); ++k) {
      targets.push_back(s.rewards[k] + values(s.next_states[k]));
    }
    const oracles::LVec ref = oracles::direct_solve(s.phis, targets, d, eta, 1.0L);
    const long double err = (w.cast<long double>() - ref).norm();
    EXPECT_LE(err, 1e-8L * std::max(ref.norm(), 1.0L)) << "trial " << trial;
  }
}

TEST(Bonus, FreshStateIsBetaTimesNorm) {
  const GramState g(3, 0.9, 1.0);
  const Eigen::Vector3d phi(0.6, 0.0, 0.8);
  EXPECT_NEAR(bonus(g, phi, 2.0), 2.0, 1e-15);
  EXPECT_NEAR(bonus(g, Eigen::Vector3d(0.3, 0.0, 0.4), 2.0), 1.0, 1e-15);
}

TEST(Bonus, AfterOneUpdateIsBetaOverRootTwo) {
  GramState g(2, 0.7, 1.0);
  g.update(Eigen::Vector2d(1, 0));
  EXPECT_NEAR(bonus(g, Eigen::Vector2d(1, 0), 3.0), 3.0 / std::sqrt(2.0), 1e-15);
}

TEST(Bonus, RejectsNegativeBeta) {
  const GramState g(2, 0.9, 1.0);
  EXPECT_THROW(bonus(g, Eigen::Vector2d(1, 0), -1.0), std::invalid_argument);
}

TEST(Bonus, MatchesExtendedPrecisionDirectForm) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 6);
    const int t = 1 + static_cast<int>(rng() % 50);
    const double eta = std::array{0.5, 0.9, 0.99, 1.0}[rng() % 4];
    const Stream s = random_stream(rng, d, t - 1, 2);
    const GramState g = absorb(s, d, eta, 1.0);
    const Eigen::VectorXd q = oracles::unit_ball(rng, d);
    const double mine = bonus(g, q, 1.7);
    const long double ref = oracles::direct_bonus(s.phis, d, eta, 1.0L, q, 1.7L);
    EXPECT_LE(std::abs(mine - ref), 1e-8L * std::max(ref, 1e-300L)) << "trial " << trial;
  }
}

TEST(Bonus, HomogeneousInBetaAndNonIncreasingInLambda) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 5);
    const Stream s = random_stream(rng, d, 1 + static_cast<int>(rng() % 40), 2);
    const Eigen::VectorXd q = oracles::unit_ball(rng, d);
    const double eta = 0.8 + 0.2 * uniform01(rng);
    const GramState g = absorb(s, d, eta, 1.0);
    EXPECT_NEAR(bonus(g, q, 3.0), 3.0 * bonus(g, q, 1.0), 1e-12);
    double previous = INFINITY;
    for (double lambda : {0.25, 0.5, 1.0, 2.0, 8.0}) {
      const double b = bonus(absorb(s, d, eta, lambda), q, 1.0);
      EXPECT_LE(b, previous + 1e-12);
      previous = b;
    }
  }
}

TEST(Bonus, OperatorNormOfFormAtMostInverseLambda) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 6);
    const double lambda = 0.1 + 2.0 * uniform01(rng);
    const Stream s = random_stream(rng, d, static_cast<int>(rng() % 200), 2);
    const GramState g = absorb(s, d, 0.5 + 0.5 * uniform01(rng), lambda);
    const GramFactord f(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.bonus_form());
    EXPECT_LE(eig.eigenvalues().maxCoeff(), (1.0 + 1e-9) / lambda);
  }
}

TEST(WeightNorm, BoundHoldsForTargetsWithinTwoH) {
  Rng rng(7);
  const int H = 3;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 6);
    const double eta = std::array{0.5, 0.9, 0.99, 1.0}[rng() % 4];
    const double lambda = 0.5 + uniform01(rng);
    const Stream s = random_stream(rng, d, static_cast<int>(rng() % 60), 3);
    History history;
    const GramState g = absorb(s, d, eta, lambda, &history);
    // Adversarial targets at the edge of [-2H, 2H] (reward in [0,1], value in [-H, H]).
    const Eigen::Vector3d values(H, -H, H - 1);
    const Eigen::VectorXd w = wls_solve(g, history, [&](int sp) { return values(sp); });
    EXPECT_LE(w.norm(), weight_norm_bound(d, H, eta, lambda, g.count()) + 1e-9);
  }
}

TEST(WeightNorm, BoundFormula) {
  EXPECT_NEAR(weight_norm_bound(4, 2, 0.5, 1.0, 3), 4.0 * std::sqrt(4.0 * 1.75), 1e-12);
  EXPECT_NEAR(weight_norm_bound(4, 2, 1.0, 2.0, 8), 4.0 * std::sqrt(16.0), 1e-12);
  EXPECT_EQ(weight_norm_bound(3, 5, 0.9, 1.0, 0), 0.0);
}

TEST(MatrixInequalities, TraceOfWeightedLeveragesAtMostDim) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 6);
    const double eta = 0.5 + 0.5 * uniform01(rng);
    const Stream s = random_stream(rng, d, static_cast<int>(rng() % 100), 2);
    const GramState g = absorb(s, d, eta, 0.1 + uniform01(rng));
    const GramFactord f(g);
    double total = 0.0;
    const int n = static_cast<int>(s.phis.size());
    for (int k = 0; k < n; ++k) {
      total += std::pow(eta, n - 1 - k) * s.phis[k].dot(f.solve(s.phis[k]));
    }
    EXPECT_LE(total, d * (1.0 + 1e-12));
  }
}

TEST(MatrixInequalities, LogDeterminantBound) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 6);
    const double eta = 0.5 + 0.5 * uniform01(rng);
    const double lambda = 0.1 + uniform01(rng);
    const int n = static_cast<int>(rng() % 300);
    const Stream s = random_stream(rng, d, n, 2);
    const GramState g = absorb(s, d, eta, lambda);
    double mass = 0.0, mass_sq = 0.0;
    for (int k = 0; k < n; ++k) {
      mass += std::pow(eta, n - 1 - k);
      mass_sq += std::pow(eta, 2 * (n - 1 - k));
    }
    EXPECT_LE(log_determinant(g.regularized()), d * std::log(lambda + mass / d) + 1e-12);
    EXPECT_LE(log_determinant(g.regularized_tilde()), d * std::log(lambda + mass_sq / d) + 1e-12);
  }
}

TEST(LogDeterminant, DiagonalAndFailure) {
  EXPECT_NEAR(log_determinant<double>(Eigen::Vector3d(2, 3, 5).asDiagonal().toDenseMatrix()),
              std::log(30.0), 1e-14);
  EXPECT_THROW(log_determinant<double>(-Eigen::MatrixXd::Identity(2, 2)), NumericalFault);
}

TEST(WlsCore, WorksInLongDouble) {
  RescaledGramState<long double> g(2, 0.9L, 1.0L);
  g.update(Eigen::Vector2d(1, 0));
  StepHistory<long double> h{{oracles::LVec::Unit(2, 0), 1.0L, 0}};
  const auto w = wls_solve(g, h, [](int) { return 0.0L; });
  EXPECT_NEAR(static_cast<double>(w(0)), 0.5, 1e-18);
}
