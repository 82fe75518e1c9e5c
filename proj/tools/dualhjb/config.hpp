#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <dualhjb/cvar.hpp>
#include <dualhjb/dual_value.hpp>
#include <dualhjb/market.hpp>
#include <dualhjb/simulation.hpp>
#include <dualhjb/utility.hpp>

namespace dualhjb::app {

struct CvarBlock {
  double beta = 0.95;
  std::vector<double> lambdas{0.0, 0.05, 0.1, 0.2, 0.5};
};

struct RiskBlock {
  std::vector<double> t{0.0, 0.25, 0.5, 0.75, 0.99};
  std::vector<double> x;  // defaults to output.x_grid
};

struct OutputBlock {
  std::string dir = "out";
  std::vector<double> t_grid{0.0, 0.25, 0.5, 0.75, 0.99};
  std::vector<double> x_grid;  // default: 24 log-spaced points on [0.05, 20]
  std::vector<double> y_grid;  // default: 24 log-spaced points on [0.01, 100]
  bool write_paths = false;
  double eps_tail = 1e-3;  // solve-dual tail thresholds
};

struct ScenarioConfig {
  std::uint64_t seed = 20240917;
  double x0 = 1.0;
  MarketParams market = MarketParams::scalar(0.2, 0.4, 1.0, ConeSpec::whole_space(1));
  UtilityFunction utility = UtilityFunction::power(0.5);
  QuadratureConfig quadrature;
  SimConfig simulation;
  ControlTableConfig control_table;
  CvarBlock cvar;
  RiskBlock risk;
  OutputBlock output;
  /// Canonical JSON of the parsed config with defaults filled in.
  std::string canonical;
};

/// Parses and validates a JSON scenario. Throws ConfigError with a line/column
/// for syntax errors and a field path for semantic ones; unknown keys are rejected.
ScenarioConfig parse_config(const std::string& text);

/// The built-in Merton scenario: U = x^{1/2}, b = 0.2, sigma = 0.4, K = R, T = 1.
ScenarioConfig merton_scenario();

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace dualhjb::app
