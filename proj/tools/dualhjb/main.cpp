#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include <dualhjb/errors.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dualhjb::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  namespace app = dualhjb::app;
  CLI::App cli{"Utility maximization under cone constraints via the dual value function"};
  cli.require_subcommand(1, 1);
  cli.fallthrough();

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  cli.add_option("--config", config_path, "scenario JSON file (env DUALHJB_CONFIG)");
  cli.add_option("--seed", seed, "64-bit seed override (env DUALHJB_SEED)");
  cli.add_option("--out", out_dir, "output directory (env DUALHJB_OUT)");
  cli.add_option("--workers", workers, "simulation worker threads (env DUALHJB_WORKERS)")
      ->check(CLI::PositiveNumber);
  const std::map<std::string, std::string> help = {
      {"solve-dual", "tabulate the dual value surface"},
      {"solve-primal", "tabulate the primal value surface and optimal control"},
      {"control", "tabulate the optimal control"},
      {"simulate", "simulate wealth under the optimal control"},
      {"verify", "Monte Carlo checks of value and duality pairing"},
      {"cvar-frontier", "utility/CVaR frontier over lambda"},
      {"risk-profile", "static and dynamic relative risk aversion"},
      {"selftest", "closed-form checks on the Merton case"}};
  for (const auto& name : app::subcommand_names()) {
    auto it = help.find(name);
    cli.add_subcommand(name, it == help.end() ? "" : it->second);
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = cli.get_subcommands().front()->get_name();

  std::string stage = "config";
  try {
    if (config_path.empty()) config_path = env("DUALHJB_CONFIG").value_or("");
    if (!seed) {
      if (auto s = env("DUALHJB_SEED")) seed = std::stoull(*s);
    }
    if (!workers) {
      if (auto w = env("DUALHJB_WORKERS")) workers = static_cast<unsigned>(std::stoul(*w));
    }
    if (out_dir.empty()) out_dir = env("DUALHJB_OUT").value_or("");

    app::ScenarioConfig cfg;
    if (!config_path.empty()) {
      cfg = app::parse_config(read_file(config_path));
    } else if (command == "selftest") {
      cfg = app::merton_scenario();
    } else {
      throw dualhjb::ConfigError("--config is required for '" + command + "'");
    }
    if (seed) app::set_seed(cfg, *seed);
    if (workers) {
      if (*workers == 0) throw dualhjb::ConfigError("--workers must be positive");
      cfg.simulation.workers = *workers;
    }
    if (out_dir.empty()) out_dir = cfg.output.dir;

    stage = command;
    const auto report = app::run_subcommand(command, cfg, out_dir);
    for (const auto& c : report.diagnostics.checks()) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
      if (!c.detail.empty()) std::cout << "  " << c.detail;
      std::cout << '\n';
    }
    std::cout << command << ": " << (report.passed() ? "all checks passed" : "check failure")
              << " (outputs in " << out_dir << ")\n";
    return report.passed() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    return 1;
  }
}
