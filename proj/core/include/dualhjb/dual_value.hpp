#pragma once

#include <string>
#include <vector>

#include "dualhjb/conjugate.hpp"
#include "dualhjb/diagnostics.hpp"
#include "dualhjb/market.hpp"

namespace dualhjb {

struct QuadratureConfig {
  double half_width = 8.0;  // Q, in standardized log units
  int nodes = 4001;         // N, composite Simpson
  std::string derivative_scheme = "kernel";

  /// Q >= 6, N odd and >= 201, scheme "kernel".
  void validate() const;
};

struct DualDerivs {
  double v = 0.0;
  double v_y = 0.0;
  double v_yy = 0.0;
};

/// Warm start for inverse_Y; owned by the caller so surfaces stay immutable.
struct InverseHint {
  double y = 0.0;
};

struct LimitThresholds {
  double eps_tail = 1e-3;
  double steep_slope = -1.0e3;  // V_y(t, 1e-6) must lie below this
};

struct ResidualSummary {
  double max = 0.0;
  double mean = 0.0;
  double argmax_t = 0.0;
  double argmax_y = 0.0;
  std::size_t points = 0;
};

/// V(t,y) = E[U~(Y_T)] for the lognormal dual process started at y, i.e. the
/// heat-kernel integral of U~ in log coordinates with clock tau(t).
class DualSurface {
 public:
  /// Throws ConfigError if the market fails validate_parabolicity.
  DualSurface(DualUtility dual, EffectiveMarket market, QuadratureConfig quad = {});

  const DualUtility& dual_utility() const { return dual_; }
  const EffectiveMarket& market() const { return market_; }
  const QuadratureConfig& quadrature() const { return quad_; }
  double horizon() const { return market_.horizon(); }
  double tau(double t) const { return market_.tau_at(t); }

  /// Same utility and market with a different quadrature rule.
  DualSurface with_quadrature(QuadratureConfig quad) const;

  double value(double t, double y) const;
  DualDerivs derivs(double t, double y) const;
  /// The same integrals at an explicit clock value tau > 0.
  DualDerivs derivs_at_tau(double tau, double y) const;

  /// y V_y - V from the derivatives.
  double w_value(double t, double y) const;
  /// y V_y - V as the kernel integral of eta U~'(eta) - U~(eta).
  double w_direct(double t, double y) const;

  /// The y with -V_y(t, y) = x; residual |-V_y - x| <= tol x (so also <= tol max(1, x)).
  double inverse(double t, double x, double tol = 1e-12, InverseHint* hint = nullptr) const;

  /// V_t + 1/2 |theta_hat|^2 y^2 V_yy by central differences in t, scaled by
  /// |V_t| + 1/2 |theta_hat|^2 y^2 V_yy.
  double pde_residual(double t, double y, double rel_step = 1e-3) const;

  /// K = L-hat exp(p/(p-1)^2 tau(0)) in V(t,y) <= K (1 + y^{p/(p-1)}).
  double growth_constant() const;

 private:
  struct Moments {
    double m0 = 0.0;  // V
    double m1 = 0.0;  // int phi z U~
    double m2 = 0.0;  // int phi (2 z^2 - 1) U~
    double wd = 0.0;  // int phi (eta U~' - U~)
  };
  Moments integrate(double tau, double y, bool want_w) const;

  DualUtility dual_;
  EffectiveMarket market_;
  QuadratureConfig quad_;
};

double hatV(const DualSurface& ds, double t, double y);
DualDerivs hatV_derivs(const DualSurface& ds, double t, double y);

struct WSurface {
  double from_derivs = 0.0;
  double direct = 0.0;
};
WSurface w_surface(const DualSurface& ds, double t, double y);

double inverse_Y(const DualSurface& ds, double t, double x, double tol = 1e-12,
                 InverseHint* hint = nullptr);

DiagnosticsReport limit_diagnostics(const DualSurface& ds, double t,
                                    const LimitThresholds& thresholds = {});

/// Max and mean of pde_residual over the (t, y) grid.
ResidualSummary dual_pde_residual_grid(const DualSurface& ds, const std::vector<double>& ts,
                                       const std::vector<double>& ys, double rel_step = 1e-3);

/// Checks V(t,y) <= K (1 + y^{p/(p-1)}) on the grid.
DiagnosticsReport dual_growth_check(const DualSurface& ds, const std::vector<double>& ts,
                                    const std::vector<double>& ys);

}  // namespace dualhjb
