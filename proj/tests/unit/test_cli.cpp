#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <dualhjb/commands.hpp>
#include <dualhjb/config.hpp>
#include <dualhjb/errors.hpp>

namespace fs = std::filesystem;
using dualhjb::ConfigError;
using namespace dualhjb::app;

namespace {

const char* kFastMerton = R"({
  "market": {"T": 1.0, "b": [0.2], "sigma": [[0.4]], "cone": {"kind": "whole_space"}},
  "utility": {"family": "power", "p": 0.5},
  "simulation": {"paths": 2000, "steps_per_year": 20},
  "output": {"t_grid": [0.0, 0.5], "x_grid": [0.5, 2.0], "y_grid": [0.5, 2.0]}
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DUALHJB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kMarket = R"({"T": 1.0, "b": [0.2], "sigma": [[0.4]]})";
const char* kUtility = R"({"family": "power", "p": 0.5})";

std::string scenario(const std::string& market, const std::string& utility,
                     const std::string& extra = {}) {
  return "{\"market\": " + market + ", \"utility\": " + utility + extra + "}";
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, MinimalScenarioGetsDefaults) {
  const auto cfg = parse_config(kFastMerton);
  EXPECT_EQ(cfg.x0, 1.0);
  EXPECT_EQ(cfg.quadrature.nodes, 4001);
  EXPECT_EQ(cfg.market.dim(), 1);
  EXPECT_FALSE(cfg.canonical.empty());
}

TEST(Config, ShippedScenariosParse) {
  for (const char* name : {"merton.json", "kinked.json", "cone2d.json"}) {
    EXPECT_NO_THROW(parse_config(slurp(fs::path(DUALHJB_CONFIG_DIR) / name))) << name;
  }
}

TEST(Config, PowerExponentOutOfRange) {
  const auto msg = config_error(scenario(kMarket, R"({"family": "power", "p": 1.2})"));
  EXPECT_NE(msg.find("p must lie in (0,1)"), std::string::npos) << msg;
}

TEST(Config, NegativeThetaFloor) {
  const auto msg = config_error(
      scenario(R"({"T": 1, "b": [0.2], "sigma": [[0.4]], "theta_floor": -0.1})", kUtility));
  EXPECT_NE(msg.find("theta_floor"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyNamesPath) {
  const auto msg = config_error(scenario(kMarket, kUtility, R"(, "simulation": {"pathz": 10})"));
  EXPECT_NE(msg.find("simulation.pathz"), std::string::npos) << msg;
}

TEST(Config, SyntaxErrorHasLineAndColumn) {
  const auto msg = config_error("{\n  \"x0\": 1.0,\n  \"seed\": ]\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, SingularSigmaNamesField) {
  const auto msg = config_error(
      scenario(R"({"T": 1, "b": [0.1, 0.1], "sigma": [[1, 2], [2, 4]]})", kUtility));
  EXPECT_NE(msg.find("market.sigma"), std::string::npos) << msg;
}

TEST(Commands, SolvePrimalKinkedColumns) {
  auto cfg = parse_config(slurp(fs::path(DUALHJB_CONFIG_DIR) / "kinked.json"));
  cfg.output.t_grid = {0.0, 0.5};
  cfg.output.x_grid = {0.5, 2.0};
  const auto dir = scratch("solve_primal");
  const auto rep = run_subcommand("solve-primal", cfg, dir.string());
  EXPECT_TRUE(rep.passed());
  const auto csv = slurp(dir / "primal_surface.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x,y,u,u_t,u_x,u_xx,pi_star_0,residual");
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "timings.json"));
}

TEST(Commands, SolveDualColumns) {
  const auto cfg = parse_config(kFastMerton);
  const auto dir = scratch("solve_dual");
  run_subcommand("solve-dual", cfg, dir.string());
  const auto csv = slurp(dir / "dual_surface.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,y,tau,hatV,hatV_y,hatV_yy,w,residual");
}

TEST(Commands, UnknownSubcommandThrows) {
  EXPECT_THROW(run_subcommand("nope", parse_config(kFastMerton), scratch("nope").string()),
               std::exception);
}

TEST(Cli, UnknownSubcommandExitsOne) { EXPECT_EQ(run_cli("frobnicate"), 1); }

TEST(Cli, MissingConfigExitsOne) { EXPECT_EQ(run_cli("solve-dual --out " + scratch("noconf").string()), 1); }

TEST(Cli, BadConfigExitsOne) {
  const auto dir = scratch("badconf");
  std::ofstream(dir / "bad.json") << scenario(kMarket, R"({"family": "power", "p": 1.2})");
  EXPECT_EQ(run_cli("solve-dual --config " + (dir / "bad.json").string()), 1);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto dir = scratch("rerun");
  std::ofstream(dir / "fast.json") << kFastMerton;
  const std::string conf = "--config " + (dir / "fast.json").string();
  ASSERT_EQ(run_cli("simulate " + conf + " --seed 7 --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli("simulate " + conf + " --seed 7 --out " + (dir / "b").string()), 0);
  ASSERT_EQ(run_cli("simulate " + conf + " --seed 7 --workers 3 --out " + (dir / "c").string()), 0);
  for (const char* f : {"simulate_summary.csv", "report.json"}) {
    const auto a = slurp(dir / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / "b" / f)) << f;
    EXPECT_EQ(a, slurp(dir / "c" / f)) << f;
  }
  ASSERT_EQ(run_cli("simulate " + conf + " --seed 8 --out " + (dir / "d").string()), 0);
  EXPECT_NE(slurp(dir / "a" / "simulate_summary.csv"), slurp(dir / "d" / "simulate_summary.csv"));
}
