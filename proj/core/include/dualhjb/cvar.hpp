#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dualhjb/dual_value.hpp"
#include "dualhjb/market.hpp"
#include "dualhjb/simulation.hpp"
#include "dualhjb/utility.hpp"

namespace dualhjb {

struct CvarSpec {
  double beta = 0.95;
  double lambda = 0.0;
  double x0 = 1.0;

  double delta() const { return 1.0 / (1.0 - beta); }
  /// beta in (0, 1), lambda >= 0, x0 > 0; ConfigError otherwise.
  void validate() const;
};

/// U^y(x) = U(x) - k (U(x0) - U(x) - y)^+ + k (U(x0) - y)^+ with k = lambda delta.
/// Power and min-of-pieces bases stay in the min-of-pieces family (closed-form
/// conjugate); other bases become a composite. Throws SolverError if the result
/// fails validate_assumption1.
UtilityFunction build_modified_utility(const UtilityFunction& u, const CvarSpec& spec, double y);

/// Market and quadrature shared by every inner solve.
struct PipelineContext {
  EffectiveMarket market;
  QuadratureConfig quadrature;
};

/// u(0, x0) for the modified utility U^y.
double inner_value(const CvarSpec& spec, double y, const UtilityFunction& u,
                   const PipelineContext& ctx);

/// g(y) = inner_value(y) - lambda delta (U(x0) - y)^+ - lambda y.
double outer_objective(const CvarSpec& spec, double y, const UtilityFunction& u,
                       const PipelineContext& ctx);

struct OuterResult {
  double y_star = 0.0;
  double value = 0.0;  // g(y*)
  double lo = 0.0;     // final bracket
  double hi = 0.0;
  int evaluations = 0;
};

/// Golden-section maximization of g. The default bracket is
/// [U(x0) - 10 (1 + |U(x0)|), U(x0)]; its left end moves out geometrically
/// until g turns down (SolverError after 40 expansions). Stops when the
/// bracket is below tol max(1, |y|).
OuterResult outer_optimize(const CvarSpec& spec, const UtilityFunction& u,
                           const PipelineContext& ctx, double tol = 1e-6,
                           std::optional<std::pair<double, double>> bracket = {});

struct CvarVar {
  double cvar = 0.0;
  double var = 0.0;
};

/// Minimizes y + delta mean (Z - y)^+ over the sample points; VaR is the
/// smallest minimizer.
CvarVar cvar_var_of_sample(std::vector<double> losses, double beta);

/// Tail average over order statistics with the fractional atom at k = ceil(beta n).
CvarVar cvar_var_order_statistic(std::vector<double> losses, double beta);

struct FrontierPoint {
  double lambda = 0.0;
  double y_star = 0.0;
  double value = 0.0;  // scalarized g(y*)
  Estimate utility;    // E[U(X_T)] under the U^{y*}-optimal control
  double cvar = 0.0;
  double cvar_se = 0.0;
  double var = 0.0;
};

/// One outer solve and one simulation per lambda; every simulation uses
/// cfg.seed so the points share random numbers.
std::vector<FrontierPoint> frontier_sweep(const UtilityFunction& u, const CvarSpec& base,
                                          const std::vector<double>& lambdas,
                                          const PipelineContext& ctx, const SimConfig& cfg,
                                          const ControlTableConfig& table = {});

}  // namespace dualhjb
