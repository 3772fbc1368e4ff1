#include "optwlsvi/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace optwlsvi {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  return parts;
}

bool valid_name(const std::string& name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!cfg.entries_.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

const std::string& KeyValueConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing key '" + key + "'");
  used_[key] = true;
  return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

int KeyValueConfig::get_int(const std::string& key, std::optional<int> fallback) const {
  if (!has(key) && fallback) return *fallback;
  return parse_int(get(key), key);
}

double KeyValueConfig::get_double(const std::string& key, std::optional<double> fallback) const {
  if (!has(key) && fallback) return *fallback;
  return parse_double(get(key), key);
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_) {
    if (!used_.count(key)) out.push_back(key);
  }
  return out;
}

int parse_int(const std::string& text, const std::string& what) {
  int v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  }
  return v;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::vector<std::int64_t> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<std::int64_t> out;
  const auto range = text.find("..");
  if (range != std::string::npos) {
    const std::int64_t lo = parse_int(trim(text.substr(0, range)), what);
    const std::int64_t hi = parse_int(trim(text.substr(range + 2)), what);
    if (hi < lo) throw ConfigError(what + ": empty range '" + text + "'");
    for (std::int64_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  for (const auto& part : split(text, ',')) {
    if (part.empty()) continue;
    std::int64_t v = 0;
    const char* end = part.data() + part.size();
    auto [ptr, ec] = std::from_chars(part.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
      throw ConfigError(what + ": expected integers, got '" + part + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::MixtureRandom: return "mixture-random";
    case EnvKind::AbruptSwitch: return "abrupt-switch";
    case EnvKind::Drift: return "drift";
    case EnvKind::Tabular: return "tabular";
    case EnvKind::Bandit: return "bandit";
  }
  return "unknown";
}

std::string to_string(EtaSource source) {
  switch (source) {
    case EtaSource::Explicit: return "explicit";
    case EtaSource::FromBudget: return "corollary";
    case EtaSource::FromTvBudget: return "corollary-tv";
    case EtaSource::Baseline: return "baseline";
  }
  return "unknown";
}

namespace {

EnvSpec parse_env(const KeyValueConfig& kv) {
  EnvSpec env;
  const std::string kind = kv.get("env.kind");
  if (kind == "mixture-random") env.kind = EnvKind::MixtureRandom;
  else if (kind == "abrupt-switch") env.kind = EnvKind::AbruptSwitch;
  else if (kind == "drift") env.kind = EnvKind::Drift;
  else if (kind == "tabular") env.kind = EnvKind::Tabular;
  else if (kind == "bandit") env.kind = EnvKind::Bandit;
  else throw ConfigError("env.kind: unknown kind '" + kind + "'");

  const std::string base = kv.get_or("env.base", "tabular");
  if (base == "tabular") env.base = EnvBase::Tabular;
  else if (base == "mixture") env.base = EnvBase::Mixture;
  else throw ConfigError("env.base: unknown base '" + base + "'");

  env.states = kv.get_int("env.states", 3);
  env.actions = kv.get_int("env.actions", 2);
  env.dim = kv.get_int("env.dim", 4);
  env.horizon = kv.get_int("env.horizon", 3);
  if (env.states < 1 || env.actions < 1 || env.dim < 1 || env.horizon < 1) {
    throw ConfigError("env: sizes must be positive");
  }
  if (kv.has("env.seed")) {
    const auto seeds = parse_int_list(kv.get("env.seed"), "env.seed");
    if (seeds.size() != 1 || seeds[0] < 0) throw ConfigError("env.seed: one nonnegative integer");
    env.seed = static_cast<std::uint64_t>(seeds[0]);
  }
  if (kv.has("env.switches")) {
    for (auto p : parse_int_list(kv.get("env.switches"), "env.switches")) {
      env.switch_points.push_back(static_cast<int>(p));
    }
  }
  const std::string mode = kv.get_or("env.switch_mode", "reverse-actions");
  if (mode == "reverse-actions") env.switch_mode = SwitchMode::ReverseActions;
  else if (mode == "independent") env.switch_mode = SwitchMode::Independent;
  else throw ConfigError("env.switch_mode: unknown mode '" + mode + "'");

  const std::string init = kv.get_or("env.initial_state", "uniform");
  if (init != "uniform") {
    env.initial_state = parse_int(init, "env.initial_state");
    if (*env.initial_state < 0 || *env.initial_state >= env.states) {
      throw ConfigError("env.initial_state: out of range");
    }
  }
  if (env.kind == EnvKind::Bandit) {
    for (const auto& part : split(kv.get("env.arm_rewards"), ',')) {
      const double r = parse_double(part, "env.arm_rewards");
      if (r < 0.0 || r > 1.0) throw ConfigError("env.arm_rewards: rewards must lie in [0, 1]");
      env.arm_rewards.push_back(r);
    }
    if (env.arm_rewards.empty()) throw ConfigError("env.arm_rewards: need at least one arm");
  }
  return env;
}

AgentSpec parse_agent(const KeyValueConfig& kv, int index) {
  const std::string prefix = "agent." + std::to_string(index) + ".";
  AgentSpec spec;
  spec.name = kv.get(prefix + "name");
  if (!valid_name(spec.name)) {
    throw ConfigError(prefix + "name: use letters, digits, '_', '-' or '.'");
  }
  const std::string kind = kv.get_or(prefix + "kind", "opt-wlsvi");
  if (kind == "opt-wlsvi") spec.kind = AgentKind::OptWlsvi;
  else if (kind == "oracle") spec.kind = AgentKind::Oracle;
  else throw ConfigError(prefix + "kind: unknown kind '" + kind + "'");

  const std::string eta = kv.get_or(prefix + "eta", "baseline");
  if (eta == "corollary") {
    spec.eta_source = EtaSource::FromBudget;
  } else if (eta == "corollary-tv") {
    spec.eta_source = EtaSource::FromTvBudget;
  } else if (eta == "baseline") {
    spec.eta_source = EtaSource::Baseline;
    spec.eta = 1.0;
  } else {
    spec.eta_source = EtaSource::Explicit;
    spec.eta = parse_double(eta, prefix + "eta");
    if (!(spec.eta > 0.0 && spec.eta <= 1.0)) throw ConfigError(prefix + "eta: must lie in (0, 1]");
  }
  spec.lambda = kv.get_double(prefix + "lambda", 1.0);
  if (!(spec.lambda > 0.0)) throw ConfigError(prefix + "lambda: must be > 0");
  const std::string beta = kv.get_or(prefix + "beta", "theory");
  if (beta != "theory") {
    spec.beta = parse_double(beta, prefix + "beta");
    if (*spec.beta < 0.0) throw ConfigError(prefix + "beta: must be >= 0");
  }
  spec.c_abs = kv.get_double(prefix + "c", 1.0);
  spec.delta = kv.get_double(prefix + "delta", 0.1);
  if (!(spec.c_abs > 0.0)) throw ConfigError(prefix + "c: must be > 0");
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) throw ConfigError(prefix + "delta: must lie in (0, 1)");
  if (spec.kind == AgentKind::OptWlsvi && !spec.beta &&
      (spec.eta_source == EtaSource::Baseline ||
       (spec.eta_source == EtaSource::Explicit && spec.eta == 1.0))) {
    throw ConfigError(prefix + "beta: theory beta needs eta < 1; give an explicit beta");
  }
  return spec;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  const KeyValueConfig kv = KeyValueConfig::parse(in);
  RunConfig cfg;
  cfg.env = parse_env(kv);
  cfg.episodes = kv.get_int("episodes");
  if (cfg.episodes < 1) throw ConfigError("episodes: must be >= 1");
  for (auto s : parse_int_list(kv.get("seeds"), "seeds")) {
    if (s < 0) throw ConfigError("seeds: must be nonnegative");
    cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (cfg.seeds.empty()) throw ConfigError("seeds: need at least one seed");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
    throw ConfigError("seeds: must be distinct");
  }
  cfg.threads = kv.get_int("threads", 1);
  if (cfg.threads < 1) throw ConfigError("threads: must be >= 1");

  std::set<std::string> names;
  for (int i = 0; kv.has("agent." + std::to_string(i) + ".name"); ++i) {
    cfg.agents.push_back(parse_agent(kv, i));
    if (!names.insert(cfg.agents.back().name).second) {
      throw ConfigError("agent names must be distinct: '" + cfg.agents.back().name + "'");
    }
  }
  if (cfg.agents.empty()) throw ConfigError("need at least one agent (agent.0.name)");

  if (cfg.env.kind == EnvKind::AbruptSwitch) {
    for (std::size_t i = 0; i < cfg.env.switch_points.size(); ++i) {
      const int p = cfg.env.switch_points[i];
      if (p < 1 || p >= cfg.episodes || (i > 0 && p <= cfg.env.switch_points[i - 1])) {
        throw ConfigError("env.switches: strictly increasing indices in [1, episodes-1]");
      }
    }
  }
  if ((cfg.env.kind == EnvKind::AbruptSwitch || cfg.env.kind == EnvKind::Drift) &&
      cfg.env.switch_mode == SwitchMode::ReverseActions && cfg.env.base != EnvBase::Tabular) {
    throw ConfigError("env.switch_mode: reverse-actions needs env.base = tabular");
  }
  if (cfg.env.kind == EnvKind::Drift && cfg.episodes < 2) {
    throw ConfigError("drift environments need episodes >= 2");
  }

  const auto unused = kv.unused_keys();
  if (!unused.empty()) throw ConfigError("unrecognized or unused key '" + unused.front() + "'");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_run_config(in);
}

}  // namespace optwlsvi
