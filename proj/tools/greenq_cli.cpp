#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "greenq/bench.hpp"

namespace bench = greenq::bench;

namespace {

struct Flags {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool check = false;
  int jobs = 0;
  std::vector<std::string> sets;
  // sweep only
  std::string scenario;
  std::string param;
  double from = 0.0, to = 0.0, step = 0.0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "CSV output path (stdout when omitted)");
  cmd->add_option("--seed", f.seed, "random seed")->each([&f](const std::string&) { f.seed_given = true; });
  cmd->add_flag("--check", f.check, "assert reference thresholds, exit 3 on failure");
  cmd->add_option("--set", f.sets, "parameter override key=value (repeatable)");
  cmd->add_option("--jobs", f.jobs, "worker threads for sweeps and replications")->check(CLI::PositiveNumber);
}

bench::ScenarioConfig build_config(const std::string& command, const Flags& f, const CLI::App* sweep_cmd) {
  bench::ScenarioConfig cfg;
  if (!f.config_path.empty()) cfg = bench::load_config(f.config_path);
  if (command != "sweep") {
    if (!cfg.scenario.empty() && cfg.scenario != command)
      throw bench::ConfigError("scenario", "config names scenario '" + cfg.scenario +
                                               "' but the subcommand is '" + command + "'");
    cfg.scenario = command;
  } else {
    if (!f.scenario.empty()) cfg.scenario = f.scenario;
    if (cfg.scenario.empty()) throw bench::ConfigError("scenario", "sweep needs a scenario");
    if (sweep_cmd->count("--param") || sweep_cmd->count("--from") || sweep_cmd->count("--to") ||
        sweep_cmd->count("--step")) {
      bench::SweepSpec s = cfg.sweep.value_or(bench::SweepSpec{});
      if (sweep_cmd->count("--param")) s.param = f.param;
      if (sweep_cmd->count("--from")) s.from = f.from;
      if (sweep_cmd->count("--to")) s.to = f.to;
      if (sweep_cmd->count("--step")) s.step = f.step;
      cfg.sweep = s;
    }
    if (!cfg.sweep) throw bench::ConfigError("sweep", "no sweep block given");
  }
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw bench::ConfigError(kv, "--set expects key=value");
    const std::string key = kv.substr(0, eq);
    try {
      std::size_t used = 0;
      const double v = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument(kv);
      cfg.params[key] = v;
    } catch (const std::logic_error&) {
      throw bench::ConfigError("params." + key, "'" + key + "' must be a number");
    }
  }
  if (f.seed_given) cfg.seed = f.seed;
  if (f.jobs > 0) cfg.jobs = f.jobs;
  if (!f.out.empty()) cfg.out = f.out;
  cfg.check = cfg.check || f.check;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"greenq: make-to-stock energy supply experiments"};
  app.set_version_flag("--version", bench::kToolkitVersion);
  app.require_subcommand(1);

  Flags flags;
  for (const auto& name : bench::scenario_names()) add_common(app.add_subcommand(name, "run the " + name + " scenario"), flags);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a scenario over a parameter range");
  add_common(sweep_cmd, flags);
  sweep_cmd->add_option("--scenario", flags.scenario, "scenario to sweep");
  sweep_cmd->add_option("--param", flags.param, "parameter to sweep");
  sweep_cmd->add_option("--from", flags.from, "first value");
  sweep_cmd->add_option("--to", flags.to, "last value (inclusive)");
  sweep_cmd->add_option("--step", flags.step, "step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const bench::ScenarioConfig cfg = build_config(command, flags, sweep_cmd);
    const bench::ResultTable table = command == "sweep" ? bench::sweep(cfg) : bench::run_scenario(cfg);
    if (cfg.out.empty()) {
      std::cout << table.to_csv();
    } else {
      table.write_csv(cfg.out);
    }
    if (cfg.check) {
      for (const auto& f : table.check_failures) std::cerr << "check failed: " << f << '\n';
      if (!table.check_failures.empty()) return 3;
      std::cerr << "all checks passed\n";
    }
  } catch (const bench::ConfigError& e) {
    std::cerr << "config error";
    if (!e.key().empty()) std::cerr << " [" << e.key() << "]";
    std::cerr << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
