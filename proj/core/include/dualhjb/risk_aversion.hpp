#pragma once

#include <string>
#include <vector>

#include "dualhjb/diagnostics.hpp"
#include "dualhjb/primal_value.hpp"
#include "dualhjb/utility.hpp"

namespace dualhjb {

/// -U''(x) / U'(x); CapabilityError where U is not C^2 at x.
double static_risk_aversion(const UtilityFunction& u, double x);

/// -u_xx / u_x = 1 / (Y V_yy(Y)) at Y = Y(t, x).
double dynamic_risk_aversion(const PrimalSurface& ps, double t, double x,
                             InverseHint* hint = nullptr);

enum class Monotonicity { Increasing, Decreasing, Constant, Mixed, Undefined };
std::string to_string(Monotonicity m);

/// Sign pattern of a sampled sequence; differences within tol max(1,|v|) count as zero.
Monotonicity classify_monotone(const std::vector<double>& values, double tol = 1e-12);

enum class Curvature { Convex, Concave, Linear, Mixed };
std::string to_string(Curvature c);

/// Sign of second differences of f on a (possibly nonuniform) grid.
Curvature classify_curvature(const std::vector<double>& xs, const std::vector<double>& fs,
                             double tol = 1e-12);

struct RiskProfileRow {
  double t = 0.0;
  double x = 0.0;
  double r_static = 0.0;  // NaN where undefined
  double r_dynamic = 0.0;
};

struct MonotonicityReport {
  Monotonicity static_direction = Monotonicity::Undefined;
  std::vector<Monotonicity> dynamic_direction;  // one per t
  /// Convexity of y U~'(y) - U~(y) and of w(t, .) = y V_y - V per t.
  Curvature conjugate_shape = Curvature::Mixed;
  std::vector<Curvature> w_shape;
  /// ln u_x(t, .) vs ln U'(.), per t.
  Curvature log_marginal_static = Curvature::Mixed;
  std::vector<Curvature> log_marginal_dynamic;
  std::vector<RiskProfileRow> rows;
  DiagnosticsReport diagnostics;
};

/// For each t < T: R(t, .) strictly monotone in the direction of R(.) on xs,
/// w(t, .) curved like y U~' - U~ on the Y-image of xs, and ln u_x(t, .)
/// curved like ln U'. Where R(.) is undefined the comparison is informational.
MonotonicityReport monotonicity_report(const PrimalSurface& ps, const std::vector<double>& ts,
                                       const std::vector<double>& xs);

}  // namespace dualhjb
