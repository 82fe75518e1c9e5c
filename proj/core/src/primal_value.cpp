#include "dualhjb/primal_value.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dualhjb/errors.hpp"
#include "dualhjb/grid.hpp"

namespace dualhjb {

PrimalSurface::PrimalSurface(DualSurface dual) : dual_(std::move(dual)) {
  const double p = utility().growth().p;
  k_ = dual_.growth_constant();
  k_tilde_ = k_ + (1.0 / p) * std::pow((1.0 - p) / (k_ * p), p - 1.0);
}

double PrimalSurface::value(double t, double x, InverseHint* hint) const {
  if (!(x >= 0.0)) throw DomainError("u requires x >= 0");
  if (!(t >= 0.0 && t <= horizon())) throw DomainError("u requires 0 <= t <= T");
  if (x == 0.0) return 0.0;
  if (t == horizon()) return utility()(x);
  const double y = dual_.inverse(t, x, 1e-12, hint);
  return dual_.value(t, y) + x * y;
}

PrimalDerivs PrimalSurface::derivs(double t, double x, InverseHint* hint) const {
  if (!(x > 0.0)) throw DomainError("u derivatives require x > 0");
  if (!(t >= 0.0 && t < horizon())) throw DomainError("u derivatives require 0 <= t < T");
  const double y = dual_.inverse(t, x, 1e-12, hint);
  const auto d = dual_.derivs(t, y);
  PrimalDerivs out;
  out.y = y;
  out.u = d.v + x * y;
  out.u_x = y;
  out.u_xx = -1.0 / d.v_yy;
  out.u_t = -0.5 * market().theta_hat_sq(t) * y * y * d.v_yy;
  return out;
}

double PrimalSurface::control_scale(double t, double x, InverseHint* hint) const {
  if (!(x > 0.0)) throw DomainError("control requires x > 0");
  if (!(t >= 0.0 && t < horizon())) throw DomainError("control requires 0 <= t < T");
  const double y = dual_.inverse(t, x, 1e-12, hint);
  return y * dual_.derivs(t, y).v_yy / x;
}

ControlVector PrimalSurface::control(double t, double x, InverseHint* hint) const {
  const double rho = control_scale(t, x, hint);
  const std::size_t k = market().interval(t);
  ControlVector c{rho * market().merton_direction(k)};
  if (!market().params().cone().contains(c.pi, 1e-9 * std::max(1.0, c.pi.norm()))) {
    std::ostringstream os;
    os << "optimal control at (t=" << t << ", x=" << x << ") left the cone";
    throw SolverError(os.str());
  }
  return c;
}

double u_value(const PrimalSurface& ps, double t, double x) { return ps.value(t, x); }
PrimalDerivs u_derivs(const PrimalSurface& ps, double t, double x) { return ps.derivs(t, x); }
ControlVector optimal_control(const PrimalSurface& ps, double t, double x) {
  return ps.control(t, x);
}

double hamiltonian(double t, double /*x*/, double p_slope, double m, const EffectiveMarket& em) {
  if (m >= 0.0) return kInf;
  return -p_slope * p_slope * em.theta_hat_sq(t) / (2.0 * m);
}

double hamiltonian_integrand(const Eigen::VectorXd& pi, double t, double x, double p_slope,
                             double m, const MarketParams& mp) {
  const std::size_t k = mp.interval(t);
  return pi.dot(mp.b(k)) * x * p_slope + 0.5 * (mp.sigma(k).transpose() * pi).squaredNorm() * x * x * m;
}

double hjb_residual(const PrimalSurface& ps, double t, double x, double rel_step,
                    InverseHint* hint_in) {
  const double T = ps.horizon();
  if (!(t >= 0.0 && t < T) || !(x > 0.0)) throw DomainError("hjb_residual needs interior points");
  InverseHint local;
  InverseHint& hint = hint_in != nullptr ? *hint_in : local;
  const double hx = rel_step * x;
  const double u0 = ps.value(t, x, &hint);
  const double up = ps.value(t, x + hx, &hint);
  const double um = ps.value(t, x - hx, &hint);
  const double ux = (up - um) / (2.0 * hx);
  const double uxx = (up - 2.0 * u0 + um) / (hx * hx);

  const auto& grid = ps.market().params().grid();
  const std::size_t k = ps.market().interval(t);
  const double ht = rel_step * (T - t);
  double ut;
  if (t - ht >= grid[k] && t + ht <= grid[k + 1]) {
    ut = (ps.value(t + ht, x, &hint) - ps.value(t - ht, x, &hint)) / (2.0 * ht);
  } else if (t + 2.0 * ht <= grid[k + 1]) {
    ut = (-3.0 * u0 + 4.0 * ps.value(t + ht, x, &hint) - ps.value(t + 2.0 * ht, x, &hint)) /
         (2.0 * ht);
  } else {
    ut = (3.0 * u0 - 4.0 * ps.value(t - ht, x, &hint) + ps.value(t - 2.0 * ht, x, &hint)) /
         (2.0 * ht);
  }
  const double rhs = 0.5 * ps.market().theta_hat_sq(t) * ux * ux;
  return std::abs(ut * uxx - rhs) / rhs;
}

HjbResidualReport hjb_residual_grid(const PrimalSurface& ps, const std::vector<double>& ts,
                                    const std::vector<double>& xs, double rel_step) {
  HjbResidualReport out;
  CompensatedSum sum;
  for (double t : ts) {
    InverseHint hint;
    for (double x : xs) {
      const double r = hjb_residual(ps, t, x, rel_step, &hint);
      sum.add(r);
      ++out.points;
      if (!(r <= out.max)) {
        out.max = r;
        out.argmax_t = t;
        out.argmax_x = x;
      }
    }
  }
  if (out.points > 0) out.mean = sum.value() / static_cast<double>(out.points);
  return out;
}

RefinementStudy hjb_refinement_study(const PrimalSurface& ps, const std::vector<double>& ts,
                                     const std::vector<double>& xs, double rel_step) {
  RefinementStudy s;
  s.coarse = hjb_residual_grid(ps, ts, xs, rel_step);
  s.fine = hjb_residual_grid(ps, ts, xs, 0.5 * rel_step);
  s.observed_order = std::log2(s.coarse.max / s.fine.max);
  return s;
}

DiagnosticsReport growth_check(const PrimalSurface& ps, const std::vector<double>& ts,
                               const std::vector<double>& xs) {
  DiagnosticsReport rep;
  const double kt = ps.growth_bound();
  const double p = ps.utility().growth().p;
  std::vector<double> t_sorted = ts;
  std::sort(t_sorted.begin(), t_sorted.end());

  bool bound_ok = true;
  bool boundary_ok = true;
  bool monotone_ok = true;
  std::string bound_detail, boundary_detail, monotone_detail;
  for (double x : xs) {
    InverseHint hint;
    double prev = kInf;
    double prev_t = 0.0;
    for (double t : t_sorted) {
      const double u = ps.value(t, x, &hint);
      if (x == 0.0 && u != 0.0 && boundary_ok) {
        boundary_ok = false;
        boundary_detail = "u(" + std::to_string(t) + ", 0) != 0";
      }
      if (!(u >= 0.0 && u <= kt * (1.0 + std::pow(x, p))) && bound_ok) {
        bound_ok = false;
        std::ostringstream os;
        os << "u(" << t << ", " << x << ") = " << u << " outside [0, " << kt * (1.0 + std::pow(x, p))
           << "]";
        bound_detail = os.str();
      }
      const double tol = 1e-10 * std::max(1.0, std::abs(u));
      if (u > prev + tol && monotone_ok) {
        monotone_ok = false;
        std::ostringstream os;
        os << "u(" << t << ", " << x << ") > u(" << prev_t << ", " << x << ")";
        monotone_detail = os.str();
      }
      prev = u;
      prev_t = t;
    }
    const double terminal = ps.utility()(x);
    if (prev < terminal - 1e-10 * std::max(1.0, terminal) && monotone_ok) {
      monotone_ok = false;
      monotone_detail = "u below U at x=" + std::to_string(x);
    }
  }
  rep.add("growth_bound", bound_ok, bound_detail);
  rep.add("boundary_zero", boundary_ok, boundary_detail);
  rep.add("monotone_in_t", monotone_ok, monotone_detail);
  return rep;
}

}  // namespace dualhjb
