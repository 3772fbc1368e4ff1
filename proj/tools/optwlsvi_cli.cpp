// optwlsvi: run, compare and probe experiments from the command line.
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optwlsvi/config.hpp"
#include "optwlsvi/harness.hpp"
#include "optwlsvi/wls_core.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

optwlsvi::RunConfig load(const std::string& path, const std::string& seed_override) {
  optwlsvi::RunConfig config = optwlsvi::load_run_config(path);
  if (!seed_override.empty()) {
    config.seeds.clear();
    for (auto s : optwlsvi::parse_int_list(seed_override, "--seed-override")) {
      if (s < 0) throw optwlsvi::ConfigError("--seed-override: seeds must be nonnegative");
      config.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  return config;
}

void report_files(const std::vector<std::string>& files, bool quiet) {
  if (quiet) return;
  for (const auto& f : files) std::cout << f << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimistic weighted least-squares value iteration experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string seed_override;
  bool quiet = false;
  app.add_option("--seed-override", seed_override, "Replace the configured seeds (list or a..b)");
  app.add_flag("--quiet", quiet, "Suppress progress and the list of written files");

  std::string run_config, run_out;
  auto* run = app.add_subcommand("run", "Run every (agent, seed) pair and write CSVs");
  run->add_option("--config", run_config)->required();
  run->add_option("--out", run_out)->required();

  std::string cmp_config, cmp_out;
  auto* compare = app.add_subcommand("compare", "Run and compare at least two agents");
  compare->add_option("--config", cmp_config)->required();
  compare->add_option("--out", cmp_out)->required();

  std::vector<int> dims, episodes;
  std::string probe_out;
  auto* probe = app.add_subcommand("probe", "Time full runs over a (d, K) grid");
  probe->add_option("--dims", dims)->delimiter(',');
  probe->add_option("--episodes", episodes)->delimiter(',');
  probe->add_option("--out", probe_out, "Write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed() || compare->parsed()) {
      const bool comparing = compare->parsed();
      const auto config = load(comparing ? cmp_config : run_config, seed_override);
      if (comparing && config.agents.size() < 2) {
        throw optwlsvi::ConfigError("compare needs at least two agents");
      }
      auto progress = [&](const optwlsvi::RunResult& r) {
        if (!quiet) {
          std::cerr << "done " << r.agent << " seed " << r.seed << " regret "
                    << optwlsvi::format_number(r.final_regret()) << '\n';
        }
      };
      const auto results = optwlsvi::run_all(config, progress);
      const auto files =
          comparing ? optwlsvi::write_compare_outputs(config, results, cmp_out)
                    : optwlsvi::write_run_outputs(config, results, run_out);
      report_files(files, quiet);
    } else if (probe->parsed()) {
      const auto text = optwlsvi::probe_text(optwlsvi::complexity_probe(dims, episodes));
      if (probe_out.empty()) {
        std::cout << text;
      } else {
        optwlsvi::write_file_atomic(probe_out, text);
        report_files({probe_out}, quiet);
      }
    }
  } catch (const optwlsvi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
