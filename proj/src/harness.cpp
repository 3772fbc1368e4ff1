#include "optwlsvi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "optwlsvi/env_gen.hpp"
#include "optwlsvi/oracle.hpp"

namespace optwlsvi {

const char* const kCsvHeader = "t,return,regret,cum_regret,neg_v_count,max_w_norm";

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

EpisodeSlice second_slice(const EnvSpec& spec, const TabularEpisode* tabular,
                          const EpisodeSlice& first, Rng& rng) {
  if (spec.switch_mode == SwitchMode::ReverseActions) {
    if (!tabular) throw ConfigError("env.switch_mode = reverse-actions needs env.base = tabular");
    return embed_tabular(reverse_actions(*tabular), first.initial_state_dist);
  }
  if (tabular) {
    return embed_tabular(make_random_tabular(rng, spec.states, spec.actions, spec.horizon),
                         first.initial_state_dist);
  }
  EpisodeSlice out = first;
  out.steps = make_mixture_params(rng, first.features, spec.horizon);
  return out;
}

}  // namespace

NonStationaryLinearMDP build_environment(const EnvSpec& spec, int num_episodes,
                                         std::uint64_t run_seed) {
  Rng rng(split_seed(spec.seed.value_or(run_seed), kEnvironmentStream));

  if (spec.kind == EnvKind::Bandit) {
    const int arms = static_cast<int>(spec.arm_rewards.size());
    Eigen::VectorXd theta(arms);
    for (int a = 0; a < arms; ++a) theta(a) = spec.arm_rewards[a];
    return bandit_embedding(Eigen::MatrixXd::Identity(arms, arms), {theta}, num_episodes);
  }

  const bool tabular_base = spec.kind == EnvKind::Tabular ||
                            ((spec.kind == EnvKind::AbruptSwitch || spec.kind == EnvKind::Drift) &&
                             spec.base == EnvBase::Tabular);
  Eigen::VectorXd initial = Eigen::VectorXd::Constant(spec.states, 1.0 / spec.states);
  if (spec.initial_state) {
    initial.setZero();
    initial(*spec.initial_state) = 1.0;
  }

  TabularEpisode table;
  EpisodeSlice first;
  if (tabular_base) {
    table = make_random_tabular(rng, spec.states, spec.actions, spec.horizon);
    first = embed_tabular(table, initial);
  } else {
    first = make_mixture_slice(rng, spec.states, spec.actions, spec.dim, spec.horizon);
    first.initial_state_dist = initial;
  }

  switch (spec.kind) {
    case EnvKind::MixtureRandom:
    case EnvKind::Tabular:
      return constant_schedule(first, num_episodes);
    case EnvKind::AbruptSwitch:
      return abrupt_switch(first, second_slice(spec, tabular_base ? &table : nullptr, first, rng),
                           num_episodes, spec.switch_points);
    case EnvKind::Drift:
      return drift(first, second_slice(spec, tabular_base ? &table : nullptr, first, rng),
                   num_episodes);
    case EnvKind::Bandit:
      break;
  }
  throw ConfigError("unsupported environment kind");
}

double resolve_eta(const AgentSpec& spec, const NonStationaryLinearMDP& mdp) {
  switch (spec.eta_source) {
    case EtaSource::Explicit: return spec.eta;
    case EtaSource::Baseline: return 1.0;
    case EtaSource::FromBudget:
    case EtaSource::FromTvBudget: {
      const VariationBudget b = variation_budget(mdp);
      const double budget = spec.eta_source == EtaSource::FromBudget
                                ? b.total
                                : b.reward + 2.0 * tv_transition_budget(mdp);
      if (!(budget > 0.0)) return 1.0;
      return eta_from_budget(budget, mdp.dim(), mdp.num_episodes());
    }
  }
  return 1.0;
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const NonStationaryLinearMDP& mdp,
                                  double* resolved_eta, double* resolved_beta) {
  if (spec.kind == AgentKind::Oracle) {
    if (resolved_eta) *resolved_eta = 1.0;
    if (resolved_beta) *resolved_beta = 0.0;
    return std::make_unique<OracleAgent>();
  }
  AgentConfig cfg;
  cfg.eta = resolve_eta(spec, mdp);
  cfg.lambda = spec.lambda;
  cfg.beta = spec.beta;
  cfg.delta = spec.delta;
  cfg.c_abs = spec.c_abs;
  if (!cfg.beta && !(cfg.eta < 1.0)) {
    throw ConfigError("agent '" + spec.name + "': theory beta needs eta < 1 (zero budget?)");
  }
  auto agent = std::make_unique<OptWlsviAgent>(cfg, mdp.dim(), mdp.horizon());
  if (resolved_eta) *resolved_eta = cfg.eta;
  if (resolved_beta) *resolved_beta = agent->beta();
  return agent;
}

RunResult run_single(const RunConfig& config, const AgentSpec& spec, std::uint64_t seed) {
  const NonStationaryLinearMDP mdp = build_environment(config.env, config.episodes, seed);
  const ValidationReport report = validate(mdp);
  if (!report.ok()) {
    const Violation& v = report.violations.front();
    throw std::runtime_error("environment failed validation: " + to_string(v.kind) + " at t=" +
                             std::to_string(v.t) + " h=" + std::to_string(v.h));
  }
  RunResult run;
  run.agent = spec.name;
  run.seed = seed;
  auto agent = make_agent(spec, mdp, &run.eta, &run.beta);
  Rng rng(split_seed(seed, kRolloutStream));
  double total = 0.0;
  run.episodes.reserve(static_cast<std::size_t>(config.episodes));
  for (int t = 0; t < config.episodes; ++t) {
    EpisodeOutcome out = agent->run_episode(mdp, rng, t);
    const int s0 = out.steps.front().state;
    const TabularEpisode tab = tabulate(mdp, t);
    const double best = optimal_values(tab).values[0](s0);
    const double played = policy_values(tab, out.policy).values[0](s0);
    const double gap = best - played;
    if (gap < -1e-9) throw std::logic_error("executed policy beats the optimum");

    EpisodeRecord rec;
    rec.t = t;
    rec.realized_return = out.realized_return;
    rec.regret = std::max(gap, 0.0);
    total += rec.regret;
    rec.cum_regret = total;
    rec.steps = std::move(out.steps);
    rec.neg_v_count = out.negative_values;
    rec.max_w_norm = out.max_weight_norm;
    rec.estimated_value = out.estimated_value;
    rec.optimal_value = best;
    run.episodes.push_back(std::move(rec));
  }
  return run;
}

std::vector<RunResult> run_all(const RunConfig& config,
                               const std::function<void(const RunResult&)>& on_done) {
  struct Job {
    const AgentSpec* agent;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& agent : config.agents) {
    for (auto seed : config.seeds) jobs.push_back({&agent, seed});
  }
  std::vector<RunResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_single(config, *jobs[i].agent, jobs[i].seed);
        if (on_done) {
          std::lock_guard lock(callback_mutex);
          on_done(results[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_number failed");
  return std::string(buf, ptr);
}

std::string episode_csv(const RunResult& run) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& e : run.episodes) {
    out += std::to_string(e.t);
    out += ',';
    out += format_number(e.realized_return);
    out += ',';
    out += format_number(e.regret);
    out += ',';
    out += format_number(e.cum_regret);
    out += ',';
    out += std::to_string(e.neg_v_count);
    out += ',';
    out += format_number(e.max_w_norm);
    out += '\n';
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<AgentSummary> summarize(const RunConfig& config, const std::vector<RunResult>& runs) {
  std::vector<AgentSummary> out;
  for (const auto& agent : config.agents) {
    AgentSummary s;
    s.agent = agent.name;
    for (const auto& run : runs) {
      if (run.agent != agent.name) continue;
      s.eta = run.eta;
      s.beta = run.beta;
      s.seeds.push_back(run.seed);
      s.final_regrets.push_back(run.final_regret());
    }
    if (!s.final_regrets.empty()) {
      s.median = median(s.final_regrets);
      s.min = *std::min_element(s.final_regrets.begin(), s.final_regrets.end());
      s.max = *std::max_element(s.final_regrets.begin(), s.final_regrets.end());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string summary_text(const AgentSummary& s, int num_episodes) {
  std::ostringstream out;
  out << "agent = " << s.agent << '\n';
  out << "eta = " << format_number(s.eta) << '\n';
  out << "beta = " << format_number(s.beta) << '\n';
  out << "episodes = " << num_episodes << '\n';
  out << "seeds = ";
  for (std::size_t i = 0; i < s.seeds.size(); ++i) out << (i ? "," : "") << s.seeds[i];
  out << '\n';
  out << "final_cum_regret.median = " << format_number(s.median) << '\n';
  out << "final_cum_regret.min = " << format_number(s.min) << '\n';
  out << "final_cum_regret.max = " << format_number(s.max) << '\n';
  return out.str();
}

std::vector<std::vector<double>> median_trajectories(const RunConfig& config,
                                                     const std::vector<RunResult>& runs) {
  std::vector<std::vector<double>> out;
  for (const auto& agent : config.agents) {
    std::vector<const RunResult*> mine;
    for (const auto& run : runs) {
      if (run.agent == agent.name) mine.push_back(&run);
    }
    std::vector<double> traj(static_cast<std::size_t>(config.episodes), 0.0);
    for (int t = 0; t < config.episodes; ++t) {
      std::vector<double> column;
      for (const auto* run : mine) column.push_back(run->episodes[t].cum_regret);
      traj[t] = median(std::move(column));
    }
    out.push_back(std::move(traj));
  }
  return out;
}

namespace {

double regret_ratio(double numerator, double denominator) {
  if (denominator == 0.0) return numerator == 0.0 ? 1.0 : INFINITY;
  return numerator / denominator;
}

}  // namespace

std::string comparison_text(const RunConfig& config, const std::vector<AgentSummary>& summaries) {
  std::ostringstream out;
  out << "agents = ";
  for (std::size_t i = 0; i < summaries.size(); ++i) out << (i ? "," : "") << summaries[i].agent;
  out << '\n';
  out << "episodes = " << config.episodes << '\n';
  for (const auto& s : summaries) {
    out << "final_cum_regret.median." << s.agent << " = " << format_number(s.median) << '\n';
  }
  for (const auto& a : summaries) {
    for (const auto& b : summaries) {
      if (&a == &b) continue;
      out << "ratio." << a.agent << "." << b.agent << " = "
          << format_number(regret_ratio(a.median, b.median)) << '\n';
    }
  }
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << contents;
    if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> write_run_outputs(const RunConfig& config,
                                           const std::vector<RunResult>& runs,
                                           const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::vector<std::string> written;
  for (const auto& run : runs) {
    const auto path = (dir / (run.agent + "_seed" + std::to_string(run.seed) + ".csv")).string();
    write_file_atomic(path, episode_csv(run));
    written.push_back(path);
  }
  for (const auto& s : summarize(config, runs)) {
    const auto path = (dir / (s.agent + "_summary.txt")).string();
    write_file_atomic(path, summary_text(s, config.episodes));
    written.push_back(path);
  }
  return written;
}

std::vector<std::string> write_compare_outputs(const RunConfig& config,
                                               const std::vector<RunResult>& runs,
                                               const std::string& out_dir) {
  if (config.agents.size() < 2) throw ConfigError("compare needs at least two agents");
  std::vector<std::string> written = write_run_outputs(config, runs, out_dir);
  const std::filesystem::path dir(out_dir);
  const auto trajectories = median_trajectories(config, runs);
  for (std::size_t i = 0; i < config.agents.size(); ++i) {
    std::string csv = "t,median_cum_regret\n";
    for (std::size_t t = 0; t < trajectories[i].size(); ++t) {
      csv += std::to_string(t) + "," + format_number(trajectories[i][t]) + "\n";
    }
    const auto path = (dir / (config.agents[i].name + "_median.csv")).string();
    write_file_atomic(path, csv);
    written.push_back(path);
  }
  const auto path = (dir / "comparison.txt").string();
  write_file_atomic(path, comparison_text(config, summarize(config, runs)));
  written.push_back(path);
  return written;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("loglog_slope: need at least two points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ProbeReport complexity_probe(const std::vector<int>& dims, const std::vector<int>& episodes) {
  ProbeReport report;
  for (int d : dims) {
    for (int k : episodes) {
      if (d < 1 || k < 1) throw std::invalid_argument("complexity_probe: sizes must be positive");
      Rng env_rng(split_seed(static_cast<std::uint64_t>(d), kEnvironmentStream));
      const auto mdp = constant_schedule(make_mixture_slice(env_rng, 5, 3, d, 2), k);
      AgentConfig cfg;
      cfg.eta = 0.99;
      cfg.beta = 1.0;
      OptWlsviAgent agent(cfg, d, mdp.horizon());
      Rng rng(split_seed(static_cast<std::uint64_t>(d), kRolloutStream));
      const auto start = std::chrono::steady_clock::now();
      for (int t = 0; t < k; ++t) agent.run_episode(mdp, rng, t);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      report.cells.push_back({d, k, std::max(elapsed.count(), 1e-9)});
    }
  }
  auto fit = [&](bool by_dim_fixed) {
    std::vector<std::pair<int, double>> slopes;
    const auto& keys = by_dim_fixed ? dims : episodes;
    for (int key : keys) {
      std::vector<double> x, y;
      for (const auto& c : report.cells) {
        if ((by_dim_fixed ? c.dim : c.episodes) != key) continue;
        x.push_back(by_dim_fixed ? c.episodes : c.dim);
        y.push_back(c.seconds);
      }
      if (x.size() >= 2) slopes.emplace_back(key, loglog_slope(x, y));
    }
    return slopes;
  };
  report.slope_vs_episodes = fit(true);
  report.slope_vs_dim = fit(false);
  return report;
}

std::string probe_text(const ProbeReport& report) {
  std::ostringstream out;
  out << "dim,episodes,seconds\n";
  for (const auto& c : report.cells) {
    out << c.dim << ',' << c.episodes << ',' << format_number(c.seconds) << '\n';
  }
  for (const auto& [d, slope] : report.slope_vs_episodes) {
    out << "slope_vs_episodes.d" << d << " = " << format_number(slope) << '\n';
  }
  for (const auto& [k, slope] : report.slope_vs_dim) {
    out << "slope_vs_dim.K" << k << " = " << format_number(slope) << '\n';
  }
  return out.str();
}

}  // namespace optwlsvi
