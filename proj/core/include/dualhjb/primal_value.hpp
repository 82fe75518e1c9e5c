#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dualhjb/diagnostics.hpp"
#include "dualhjb/dual_value.hpp"

namespace dualhjb {

struct PrimalDerivs {
  double u = 0.0;
  double u_t = 0.0;
  double u_x = 0.0;
  double u_xx = 0.0;
  double y = 0.0;  // Y(t, x)
};

struct ControlVector {
  Eigen::VectorXd pi;
};

/// u(t,x) = inf_y {V(t,y) + x y}, evaluated pointwise through Y(t,x).
class PrimalSurface {
 public:
  explicit PrimalSurface(DualSurface dual);

  const DualSurface& dual() const { return dual_; }
  const UtilityFunction& utility() const { return dual_.dual_utility().source(); }
  const EffectiveMarket& market() const { return dual_.market(); }
  double horizon() const { return dual_.horizon(); }

  /// K from the dual growth bound and K~ = K + (1/p)((1-p)/(K p))^{p-1}.
  double dual_growth_bound() const { return k_; }
  double growth_bound() const { return k_tilde_; }

  double value(double t, double x, InverseHint* hint = nullptr) const;
  PrimalDerivs derivs(double t, double x, InverseHint* hint = nullptr) const;
  ControlVector control(double t, double x, InverseHint* hint = nullptr) const;
  /// Scalar factor rho = Y V_yy(Y) / x with pi* = rho (sigma')^{-1} theta_hat.
  double control_scale(double t, double x, InverseHint* hint = nullptr) const;

 private:
  DualSurface dual_;
  double k_ = 0.0;
  double k_tilde_ = 0.0;
};

double u_value(const PrimalSurface& ps, double t, double x);
PrimalDerivs u_derivs(const PrimalSurface& ps, double t, double x);
ControlVector optimal_control(const PrimalSurface& ps, double t, double x);

/// sup over pi in K of pi'b x p + 1/2 |sigma'pi|^2 x^2 M = -p^2 |theta_hat|^2 / (2M);
/// +inf for M >= 0.
double hamiltonian(double t, double x, double p_slope, double m, const EffectiveMarket& em);

/// The expression maximized by the Hamiltonian, for a given pi.
double hamiltonian_integrand(const Eigen::VectorXd& pi, double t, double x, double p_slope,
                             double m, const MarketParams& mp);

struct HjbResidualReport {
  double max = 0.0;
  double mean = 0.0;
  double argmax_t = 0.0;
  double argmax_x = 0.0;
  std::size_t points = 0;
};

/// |u_t u_xx - 1/2 |theta_hat|^2 u_x^2| / (1/2 |theta_hat|^2 u_x^2) with all
/// derivatives from finite differences of u_value: relative x-step rel_step,
/// t-step rel_step (T - t).
double hjb_residual(const PrimalSurface& ps, double t, double x, double rel_step = 2.5e-4,
                    InverseHint* hint = nullptr);
HjbResidualReport hjb_residual_grid(const PrimalSurface& ps, const std::vector<double>& ts,
                                    const std::vector<double>& xs, double rel_step = 2.5e-4);

struct RefinementStudy {
  HjbResidualReport coarse;
  HjbResidualReport fine;
  double observed_order = 0.0;  // log2(coarse.max / fine.max)
};
RefinementStudy hjb_refinement_study(const PrimalSurface& ps, const std::vector<double>& ts,
                                     const std::vector<double>& xs, double rel_step);

/// 0 <= u <= K~ (1 + x^p), u(t,0) = 0, and u(t1,x) >= u(t2,x) >= U(x) for t1 < t2.
DiagnosticsReport growth_check(const PrimalSurface& ps, const std::vector<double>& ts,
                               const std::vector<double>& xs);

}  // namespace dualhjb
