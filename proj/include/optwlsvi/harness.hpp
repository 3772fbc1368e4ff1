// Experiment runner: builds environments and agents from a RunConfig,
// executes seeded runs, scores them against the oracle and writes outputs.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "optwlsvi/agent.hpp"
#include "optwlsvi/config.hpp"
#include "optwlsvi/mdp_model.hpp"

namespace optwlsvi {

/// Seed split: stream 0 generates the environment, stream 1 drives the
/// rollouts. splitmix64 of (seed, stream), so results do not depend on the
/// order in which runs execute.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

constexpr std::uint64_t kEnvironmentStream = 0;
constexpr std::uint64_t kRolloutStream = 1;

/// The environment for one run; env.seed, when set, replaces run_seed.
NonStationaryLinearMDP build_environment(const EnvSpec& spec, int num_episodes,
                                         std::uint64_t run_seed);

/// Resolved eta for an agent spec on a concrete environment. Budget-driven
/// sources fall back to eta = 1 when the budget is zero.
double resolve_eta(const AgentSpec& spec, const NonStationaryLinearMDP& mdp);

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const NonStationaryLinearMDP& mdp,
                                  double* resolved_eta = nullptr,
                                  double* resolved_beta = nullptr);

struct EpisodeRecord {
  int t = 0;
  double realized_return = 0.0;
  double regret = 0.0;
  double cum_regret = 0.0;
  std::vector<StepTransition> steps;
  int neg_v_count = 0;
  double max_w_norm = 0.0;
  /// V_{t,0}(s_{t,0}) as estimated by the agent and its true optimum.
  double estimated_value = 0.0;
  double optimal_value = 0.0;
};

struct RunResult {
  std::string agent;
  std::uint64_t seed = 0;
  double eta = 1.0;
  double beta = 0.0;
  std::vector<EpisodeRecord> episodes;

  double final_regret() const { return episodes.empty() ? 0.0 : episodes.back().cum_regret; }
};

RunResult run_single(const RunConfig& config, const AgentSpec& agent, std::uint64_t seed);

/// All (agent, seed) pairs, agent-major in config order. Runs on up to
/// config.threads worker threads.
std::vector<RunResult> run_all(const RunConfig& config,
                               const std::function<void(const RunResult&)>& on_done = {});

extern const char* const kCsvHeader;

/// Per-episode CSV: header kCsvHeader, one row per episode.
std::string episode_csv(const RunResult& run);

/// Shortest round-trip decimal representation, independent of locale.
std::string format_number(double value);

struct AgentSummary {
  std::string agent;
  double eta = 1.0;
  double beta = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_regrets;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

double median(std::vector<double> values);

/// One summary per agent, in config order.
std::vector<AgentSummary> summarize(const RunConfig& config, const std::vector<RunResult>& runs);
std::string summary_text(const AgentSummary& summary, int num_episodes);

/// Median cumulative-regret trajectory over seeds for each agent.
std::vector<std::vector<double>> median_trajectories(const RunConfig& config,
                                                     const std::vector<RunResult>& runs);
std::string comparison_text(const RunConfig& config, const std::vector<AgentSummary>& summaries);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

/// `run`: per-(agent, seed) CSVs plus one summary per agent. Returns the
/// written paths.
std::vector<std::string> write_run_outputs(const RunConfig& config,
                                           const std::vector<RunResult>& runs,
                                           const std::string& out_dir);

/// `compare`: run outputs plus median trajectories and comparison.txt.
std::vector<std::string> write_compare_outputs(const RunConfig& config,
                                               const std::vector<RunResult>& runs,
                                               const std::string& out_dir);

struct ProbeCell {
  int dim = 0;
  int episodes = 0;
  double seconds = 0.0;
};

struct ProbeReport {
  std::vector<ProbeCell> cells;
  /// Least-squares slope of log time against log K (one per dim with at
  /// least two K values), and of log time against log d (one per K).
  std::vector<std::pair<int, double>> slope_vs_episodes;
  std::vector<std::pair<int, double>> slope_vs_dim;
};

/// Times full agent runs on stationary mixture environments
/// (|S| = 5, |A| = 3, H = 2) for each (d, K) cell.
ProbeReport complexity_probe(const std::vector<int>& dims, const std::vector<int>& episodes);
std::string probe_text(const ProbeReport& report);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace optwlsvi
