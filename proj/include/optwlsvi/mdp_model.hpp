// Finite non-stationary linear MDPs: data model, validation, simulation and
// variation budgets.
//
// Indexing is zero-based throughout: episodes t in [0, K), steps h in [0, H).
// The (state, action) pair (s, a) maps to feature-table row s * |A| + a.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace optwlsvi {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one rng draw.
/// Unlike std::uniform_real_distribution this is identical across
/// standard-library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Shared feature map phi(s, a), stored as a (|S|*|A|) x d table.
struct FeatureMap {
  int num_states = 0;
  int num_actions = 0;
  Eigen::MatrixXd table;

  FeatureMap() = default;
  FeatureMap(int num_states, int num_actions, Eigen::MatrixXd table);

  int dim() const { return static_cast<int>(table.cols()); }
  Eigen::Index row_index(int s, int a) const {
    return static_cast<Eigen::Index>(s) * num_actions + a;
  }
  auto phi(int s, int a) const { return table.row(row_index(s, a)).transpose(); }
};

/// Reward parameter theta (length d) and measure matrix (d x |S|) for one
/// (episode, step). Column s' of `measure` holds mu(s').
struct StepParams {
  Eigen::VectorXd theta;
  Eigen::MatrixXd measure;

  /// mu(S) = measure * 1.
  Eigen::VectorXd total_mass() const { return measure.rowwise().sum(); }

  friend bool operator==(const StepParams&, const StepParams&) = default;
};

/// Explicit reward and transition tables of one episode:
/// reward[h] is |S| x |A|, transition[h] is (|S|*|A|) x |S| with row s*|A|+a.
struct TabularEpisode {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Eigen::MatrixXd> reward;
  std::vector<Eigen::MatrixXd> transition;

  int horizon() const { return static_cast<int>(reward.size()); }
};

class NonStationaryLinearMDP {
 public:
  /// `schedule` is episode-major: entry t * H + h holds the params of (t, h).
  /// Shapes are checked here; the modelling invariants are checked by
  /// validate().
  NonStationaryLinearMDP(FeatureMap features, int horizon, int num_episodes,
                         std::vector<StepParams> schedule,
                         Eigen::VectorXd initial_state_dist);

  const FeatureMap& features() const { return features_; }
  int horizon() const { return horizon_; }
  int num_episodes() const { return num_episodes_; }
  int num_states() const { return features_.num_states; }
  int num_actions() const { return features_.num_actions; }
  int dim() const { return features_.dim(); }
  const Eigen::VectorXd& initial_state_dist() const { return initial_state_dist_; }
  const std::vector<StepParams>& schedule() const { return schedule_; }

  /// Throws std::out_of_range on bad indices.
  const StepParams& params(int t, int h) const;

 private:
  FeatureMap features_;
  int horizon_;
  int num_episodes_;
  std::vector<StepParams> schedule_;
  Eigen::VectorXd initial_state_dist_;
};

enum class ViolationKind {
  FeatureNorm,
  ThetaNorm,
  MeasureMassNorm,
  NegativeTransition,
  TransitionSum,
  RewardRange,
  InitialDistribution,
};

std::string to_string(ViolationKind kind);

/// One failed invariant. Indices that do not apply are -1; `magnitude` is
/// the amount by which the bound is exceeded.
struct Violation {
  ViolationKind kind;
  int t = -1;
  int h = -1;
  int s = -1;
  int a = -1;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const;
};

ValidationReport validate(const NonStationaryLinearMDP& mdp);

/// phi(s,a)^T mu_{t,h}(.). Entries in [-1e-9, 0) are clamped to zero and the
/// row renormalized when its sum is within 1e-9 of one; otherwise the raw
/// product is returned.
Eigen::VectorXd transition_probs(const NonStationaryLinearMDP& mdp, int t, int h, int s,
                                 int a);

double reward(const NonStationaryLinearMDP& mdp, int t, int h, int s, int a);

/// Inverse-CDF draw from transition_probs; consumes exactly one rng value.
int sample_next_state(const NonStationaryLinearMDP& mdp, Rng& rng, int t, int h, int s,
                      int a);

/// Inverse-CDF draw from an arbitrary probability vector; consumes one rng value.
int sample_index(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng);

int sample_initial_state(const NonStationaryLinearMDP& mdp, Rng& rng);

struct VariationBudget {
  double reward = 0.0;      // Delta_r
  double transition = 0.0;  // Delta_P
  double total = 0.0;       // Delta_r + 2 Delta_P
};

/// Sums over t = 0..K-1 of parameter differences to episode t+1, where
/// episode K repeats episode K-1.
VariationBudget variation_budget(const NonStationaryLinearMDP& mdp);

/// Diagnostic, not part of the variation budget definition:
/// sum_{t,h} max_{s,a} TV(P_{t,h}(.|s,a), P_{t+1,h}(.|s,a)). Unlike Delta_P
/// it is nonzero when probability-measure mixtures change their components.
double tv_transition_budget(const NonStationaryLinearMDP& mdp);

/// Self-describing text container; doubles are written as hexfloats so the
/// round trip is bit-exact.
void write_mdp(std::ostream& out, const NonStationaryLinearMDP& mdp);
NonStationaryLinearMDP read_mdp(std::istream& in);

}  // namespace optwlsvi
