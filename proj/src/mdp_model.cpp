#include "optwlsvi/mdp_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optwlsvi {

namespace {

constexpr double kFeatureTol = 1e-12;
constexpr double kParamTol = 1e-9;
constexpr double kTransitionTol = 1e-9;
constexpr double kInitialTol = 1e-12;
constexpr double kRewardTol = 1e-12;

void check_index(bool ok, const char* what) {
  if (!ok) throw std::out_of_range(what);
}

void check_sa(const NonStationaryLinearMDP& mdp, int s, int a) {
  check_index(s >= 0 && s < mdp.num_states(), "state index out of range");
  check_index(a >= 0 && a < mdp.num_actions(), "action index out of range");
}

}  // namespace

FeatureMap::FeatureMap(int num_states, int num_actions, Eigen::MatrixXd table)
    : num_states(num_states), num_actions(num_actions), table(std::move(table)) {
  if (num_states < 1 || num_actions < 1 || this->table.cols() < 1) {
    throw std::invalid_argument("FeatureMap: sizes must be positive");
  }
  if (this->table.rows() != static_cast<Eigen::Index>(num_states) * num_actions) {
    throw std::invalid_argument("FeatureMap: table must have |S|*|A| rows");
  }
}

NonStationaryLinearMDP::NonStationaryLinearMDP(FeatureMap features, int horizon,
                                               int num_episodes,
                                               std::vector<StepParams> schedule,
                                               Eigen::VectorXd initial_state_dist)
    : features_(std::move(features)),
      horizon_(horizon),
      num_episodes_(num_episodes),
      schedule_(std::move(schedule)),
      initial_state_dist_(std::move(initial_state_dist)) {
  if (horizon_ < 1 || num_episodes_ < 1) {
    throw std::invalid_argument("NonStationaryLinearMDP: H and K must be positive");
  }
  if (schedule_.size() != static_cast<std::size_t>(horizon_) * num_episodes_) {
    throw std::invalid_argument("NonStationaryLinearMDP: schedule must have K*H entries");
  }
  const int d = features_.dim();
  for (const auto& p : schedule_) {
    if (p.theta.size() != d || p.measure.rows() != d ||
        p.measure.cols() != features_.num_states) {
      throw std::invalid_argument("NonStationaryLinearMDP: StepParams shape mismatch");
    }
  }
  if (initial_state_dist_.size() != features_.num_states) {
    throw std::invalid_argument("NonStationaryLinearMDP: initial distribution size");
  }
}

const StepParams& NonStationaryLinearMDP::params(int t, int h) const {
  check_index(t >= 0 && t < num_episodes_, "episode index out of range");
  check_index(h >= 0 && h < horizon_, "step index out of range");
  return schedule_[static_cast<std::size_t>(t) * horizon_ + h];
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::FeatureNorm: return "feature-norm";
    case ViolationKind::ThetaNorm: return "theta-norm";
    case ViolationKind::MeasureMassNorm: return "measure-mass-norm";
    case ViolationKind::NegativeTransition: return "negative-transition";
    case ViolationKind::TransitionSum: return "transition-sum";
    case ViolationKind::RewardRange: return "reward-range";
    case ViolationKind::InitialDistribution: return "initial-distribution";
  }
  return "unknown";
}

std::size_t ValidationReport::count(ViolationKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(),
      [kind](const Violation& v) { return v.kind == kind; }));
}

ValidationReport validate(const NonStationaryLinearMDP& mdp) {
  ValidationReport report;
  auto& out = report.violations;
  const auto& fm = mdp.features();
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const double sqrt_d = std::sqrt(static_cast<double>(mdp.dim()));

  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double n = fm.phi(s, a).norm();
      if (n > 1.0 + kFeatureTol) {
        out.push_back({ViolationKind::FeatureNorm, -1, -1, s, a, n - 1.0});
      }
    }
  }

  const auto& init = mdp.initial_state_dist();
  const double init_sum = init.sum();
  if (std::abs(init_sum - 1.0) > kInitialTol || (init.array() < 0.0).any()) {
    out.push_back({ViolationKind::InitialDistribution, -1, -1, -1, -1,
                   std::max(std::abs(init_sum - 1.0), -std::min(0.0, init.minCoeff()))});
  }

  for (int t = 0; t < mdp.num_episodes(); ++t) {
    for (int h = 0; h < mdp.horizon(); ++h) {
      const StepParams& p = mdp.params(t, h);
      const double theta_norm = p.theta.norm();
      if (theta_norm > sqrt_d + kParamTol) {
        out.push_back({ViolationKind::ThetaNorm, t, h, -1, -1, theta_norm - sqrt_d});
      }
      const double mass_norm = p.total_mass().norm();
      if (mass_norm > sqrt_d + kParamTol) {
        out.push_back({ViolationKind::MeasureMassNorm, t, h, -1, -1, mass_norm - sqrt_d});
      }
      const Eigen::MatrixXd transitions = fm.table * p.measure;
      const Eigen::VectorXd rewards = fm.table * p.theta;
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const auto row = fm.row_index(s, a);
          const double min_entry = transitions.row(row).minCoeff();
          if (min_entry < -kTransitionTol) {
            out.push_back({ViolationKind::NegativeTransition, t, h, s, a, -min_entry});
          }
          const double sum_err = std::abs(transitions.row(row).sum() - 1.0);
          if (sum_err > kTransitionTol) {
            out.push_back({ViolationKind::TransitionSum, t, h, s, a, sum_err});
          }
          const double r = rewards(row);
          if (r < -kRewardTol || r > 1.0 + kRewardTol) {
            out.push_back({ViolationKind::RewardRange, t, h, s, a,
                           r < 0.0 ? -r : r - 1.0});
          }
        }
      }
    }
  }
  return report;
}

Eigen::VectorXd transition_probs(const NonStationaryLinearMDP& mdp, int t, int h, int s,
                                 int a) {
  check_sa(mdp, s, a);
  const StepParams& p = mdp.params(t, h);
  Eigen::VectorXd row = p.measure.transpose() * mdp.features().phi(s, a);
  const double total = row.sum();
  const double min_entry = row.minCoeff();
  if (min_entry < 0.0 && min_entry >= -kTransitionTol &&
      std::abs(total - 1.0) < kTransitionTol) {
    row = row.cwiseMax(0.0);
    row /= row.sum();
  }
  return row;
}

double reward(const NonStationaryLinearMDP& mdp, int t, int h, int s, int a) {
  check_sa(mdp, s, a);
  return mdp.features().phi(s, a).dot(mdp.params(t, h).theta);
}

int sample_index(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cumulative += probs(i);
    if (u < cumulative) return static_cast<int>(i);
  }
  // u landed in the rounding gap above the cumulative sum.
  return last_positive;
}

int sample_next_state(const NonStationaryLinearMDP& mdp, Rng& rng, int t, int h, int s,
                      int a) {
  return sample_index(transition_probs(mdp, t, h, s, a), rng);
}

int sample_initial_state(const NonStationaryLinearMDP& mdp, Rng& rng) {
  return sample_index(mdp.initial_state_dist(), rng);
}

VariationBudget variation_budget(const NonStationaryLinearMDP& mdp) {
  VariationBudget b;
  const int K = mdp.num_episodes();
  for (int t = 0; t + 1 < K; ++t) {
    for (int h = 0; h < mdp.horizon(); ++h) {
      const StepParams& cur = mdp.params(t, h);
      const StepParams& next = mdp.params(t + 1, h);
      b.reward += (cur.theta - next.theta).norm();
      b.transition += (cur.total_mass() - next.total_mass()).norm();
    }
  }
  b.total = b.reward + 2.0 * b.transition;
  return b;
}

double tv_transition_budget(const NonStationaryLinearMDP& mdp) {
  const auto& table = mdp.features().table;
  double total = 0.0;
  for (int t = 0; t + 1 < mdp.num_episodes(); ++t) {
    for (int h = 0; h < mdp.horizon(); ++h) {
      const Eigen::MatrixXd diff =
          table * (mdp.params(t, h).measure - mdp.params(t + 1, h).measure);
      total += 0.5 * diff.cwiseAbs().rowwise().sum().maxCoeff();
    }
  }
  return total;
}

}  // namespace optwlsvi
