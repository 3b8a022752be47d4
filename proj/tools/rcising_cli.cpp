#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "rcising/harness.hpp"

namespace {

int list_experiments() {
  for (const rcising::KindInfo& k : rcising::experiment_kinds()) {
    std::cout << k.name << "\n    " << k.description << "\n    required: ";
    if (k.required.empty()) std::cout << "(none)";
    for (std::size_t i = 0; i < k.required.size(); ++i)
      std::cout << (i ? ", " : "") << k.required[i];
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-current verification and Ising Monte Carlo experiments"};
  app.require_subcommand(0, 1);
  bool list = false;
  app.add_flag("--list-experiments", list, "Print experiment kinds and their required fields");

  struct KindOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> budget;
  };
  std::vector<std::pair<CLI::App*, std::shared_ptr<KindOptions>>> kinds;
  for (const rcising::KindInfo& k : rcising::experiment_kinds()) {
    auto opts = std::make_shared<KindOptions>();
    CLI::App* sub = app.add_subcommand(k.name, k.description);
    sub->add_option("--config", opts->config, "TOML experiment configuration");
    sub->add_option("--seed", opts->seed, "Replace the seed list with a single seed");
    sub->add_option("--out", opts->out, "Output root directory");
    sub->add_option("--budget", opts->budget, "Wall-clock budget in seconds");
    kinds.emplace_back(sub, opts);
  }
  std::string replay_dir;
  CLI::App* replay = app.add_subcommand("replay", "Re-run a persisted experiment and compare records");
  replay->add_option("dir", replay_dir, "Experiment directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (list) return list_experiments();

  try {
    if (replay->parsed()) {
      const auto report = rcising::replay_experiment(replay_dir);
      std::cout << report.message << '\n';
      return report.identical ? 0 : 1;
    }
    for (auto& [sub, opts] : kinds) {
      if (!sub->parsed()) continue;
      std::string text;
      if (!opts->config.empty()) {
        std::ifstream in(opts->config);
        if (!in) throw rcising::ConfigError("cannot read config file " + opts->config);
        std::stringstream buf;
        buf << in.rdbuf();
        text = buf.str();
      }
      rcising::Overrides overrides;
      overrides.seed = opts->seed;
      if (opts->out) overrides.out = *opts->out;
      overrides.budget_seconds = opts->budget;
      const auto config = rcising::parse_experiment(sub->get_name(), text, overrides);
      const auto outcome = rcising::run_experiment(config);
      std::cout << config.experiment_id << ": " << outcome.records << " records in "
                << outcome.directory.string() << '\n';
      if (!outcome.message.empty()) std::cerr << outcome.message << '\n';
      return outcome.exit_code;
    }
  } catch (const rcising::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << app.help();
  return 0;
}
