#include "dualhjb/dual_value.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dualhjb/errors.hpp"
#include "dualhjb/grid.hpp"

namespace dualhjb {

namespace {

constexpr double kEtaMin = 1e-300;
constexpr double kEtaMax = 1e300;

double clamp_eta(double eta) { return std::clamp(eta, kEtaMin, kEtaMax); }

}  // namespace

void QuadratureConfig::validate() const {
  if (!(half_width >= 6.0)) throw ConfigError("quadrature.half_width must be >= 6");
  if (nodes < 201 || nodes % 2 == 0) throw ConfigError("quadrature.nodes must be odd and >= 201");
  if (derivative_scheme != "kernel") {
    throw ConfigError("quadrature.derivative_scheme must be \"kernel\"");
  }
}

DualSurface::DualSurface(DualUtility dual, EffectiveMarket market, QuadratureConfig quad)
    : dual_(std::move(dual)), market_(std::move(market)), quad_(std::move(quad)) {
  quad_.validate();
  const auto rep = validate_parabolicity(market_, market_.params().theta_floor());
  if (!rep.passed()) {
    throw ConfigError("market fails the parabolicity floor: " + rep.checks().front().detail);
  }
}

DualSurface DualSurface::with_quadrature(QuadratureConfig quad) const {
  DualSurface copy = *this;
  quad.validate();
  copy.quad_ = std::move(quad);
  return copy;
}

DualSurface::Moments DualSurface::integrate(double tau, double y, bool want_w) const {
  const double s2 = 2.0 * std::sqrt(tau);
  auto z_of = [&](double eta) { return (std::log(eta / y) + tau) / s2; };

  const double q = quad_.half_width;
  const double vf = dual_.vanishes_from();
  double b = q;
  bool b_exact = false;
  if (std::isfinite(vf)) {
    const double zz = z_of(vf);
    if (zz < q) {
      b = zz;
      b_exact = true;
    }
  }
  const double a = std::min(-q, b - q);

  struct Cut {
    double z;
    double eta;  // exact breakpoint, or 0 when the cut is a plain window edge
  };
  std::vector<Cut> cuts{{a, 0.0}};
  for (double bp : dual_.breakpoints()) {
    const double z = z_of(bp);
    if (z > a && z < b) cuts.push_back({z, bp});
  }
  cuts.push_back({b, b_exact ? vf : 0.0});

  // Fixed per-panel count keeps the rule smooth in y as breakpoints move.
  const std::size_t panels_max = dual_.breakpoints().size() + 1;
  int per = static_cast<int>(static_cast<std::size_t>(quad_.nodes) / panels_max);
  if (per % 2 == 0) ++per;
  per = std::max(per, 101);

  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  CompensatedSum m0, m1, m2, wd;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double za = cuts[p].z;
    const double zb = cuts[p + 1].z;
    if (!(zb > za)) continue;
    const double h = (zb - za) / (per - 1);
    for (int i = 0; i < per; ++i) {
      const double z = (i == per - 1) ? zb : za + h * i;
      double eta;
      if (i == 0 && cuts[p].eta > 0.0) {
        eta = cuts[p].eta;
      } else if (i == per - 1 && cuts[p + 1].eta > 0.0) {
        eta = cuts[p + 1].eta;
      } else {
        eta = clamp_eta(y * std::exp(s2 * z - tau));
      }
      const double sw = (i == 0 || i == per - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      const double g = sw * h / 3.0 * inv_sqrt_pi * std::exp(-z * z);
      if (g == 0.0) continue;
      const double u = dual_(eta);
      if (u == 0.0 && !want_w) continue;
      m0.add(g * u);
      m1.add(g * z * u);
      m2.add(g * (2.0 * z * z - 1.0) * u);
      if (want_w) {
        // Panel ends sit on kinks of U~; take the derivative from inside the panel.
        const Side side = (i == per - 1) ? Side::Left : Side::Right;
        wd.add(g * (eta * dual_.derivative(eta, side) - u));
      }
    }
  }
  return {m0.value(), m1.value(), m2.value(), wd.value()};
}

double DualSurface::value(double t, double y) const {
  if (!(y > 0.0)) throw DomainError("hatV requires y > 0");
  if (!(t >= 0.0 && t <= horizon())) throw DomainError("hatV requires 0 <= t <= T");
  if (t == horizon()) return dual_(y);
  return integrate(tau(t), y, false).m0;
}

DualDerivs DualSurface::derivs_at_tau(double tau, double y) const {
  if (!(y > 0.0)) throw DomainError("hatV requires y > 0");
  if (!(tau > 0.0)) throw DomainError("kernel derivatives need tau > 0");
  const auto m = integrate(tau, y, false);
  const double vm = m.m1 / std::sqrt(tau);
  const double vmm = m.m2 / (2.0 * tau);
  return {m.m0, vm / y, (vmm - vm) / (y * y)};
}

DualDerivs DualSurface::derivs(double t, double y) const {
  if (!(t >= 0.0 && t < horizon())) throw DomainError("hatV derivatives require 0 <= t < T");
  return derivs_at_tau(tau(t), y);
}

double DualSurface::w_value(double t, double y) const {
  const auto d = derivs(t, y);
  return y * d.v_y - d.v;
}

double DualSurface::w_direct(double t, double y) const {
  if (!(y > 0.0)) throw DomainError("w requires y > 0");
  if (!(t >= 0.0 && t < horizon())) throw DomainError("w requires 0 <= t < T");
  return integrate(tau(t), y, true).wd;
}

double DualSurface::inverse(double t, double x, double tol, InverseHint* hint) const {
  if (!(x > 0.0)) throw DomainError("inverse_Y requires x > 0");
  if (!(t >= 0.0 && t < horizon())) throw DomainError("inverse_Y requires 0 <= t < T");
  const double ta = tau(t);
  const double lx = std::log(x);
  // Relative residual; implies the documented tol max(1, x) bound and keeps
  // tiny wealth levels accurate.
  const double target_tol = tol * x;

  double m = (hint != nullptr && hint->y > 0.0) ? std::log(hint->y) : 0.0;
  double lo = -kInf;  // F(lo) > 0: -V_y too large, y too small
  double hi = kInf;
  constexpr double kMaxLog = 700.0;
  constexpr double kMaxStep = 8.0;

  auto fail = [&]() {
    std::ostringstream os;
    os << "inverse_Y: x=" << x << " out of reachable range; bracket in ln y = [" << lo << ", "
       << hi << "]";
    throw RangeError(os.str());
  };

  for (int it = 0; it < 300; ++it) {
    const double y = std::exp(m);
    const auto d = derivs_at_tau(ta, y);
    const double mvy = -d.v_y;
    if (std::abs(mvy - x) <= target_tol) {
      if (hint != nullptr) hint->y = y;
      return y;
    }
    double f;
    if (mvy > 0.0 && std::isfinite(mvy)) {
      f = std::log(mvy) - lx;
    } else {
      f = mvy > 0.0 ? kInf : -kInf;
    }
    if (f > 0.0) {
      lo = m;
    } else {
      hi = m;
    }
    const double fp = y * d.v_yy / d.v_y;
    double next;
    if (std::isfinite(f) && std::isfinite(fp) && fp < 0.0) {
      next = m - f / fp;
      next = std::clamp(next, m - kMaxStep, m + kMaxStep);
    } else {
      next = f > 0.0 ? m + kMaxStep : m - kMaxStep;
    }
    if (std::isfinite(lo) && std::isfinite(hi) && !(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next) > kMaxLog) {
      next = std::clamp(next, -kMaxLog, kMaxLog);
      if (next == m) fail();
    }
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-15 * (1.0 + std::abs(m))) {
      if (hint != nullptr) hint->y = y;
      return y;
    }
    if (std::abs(next - m) <= 1e-16 * (1.0 + std::abs(m))) {
      if (hint != nullptr) hint->y = y;
      return y;
    }
    m = next;
  }
  fail();
  return 0.0;
}

double DualSurface::pde_residual(double t, double y, double rel_step) const {
  const double T = horizon();
  if (!(t >= 0.0 && t < T)) throw DomainError("pde_residual requires 0 <= t < T");
  const auto& grid = market_.params().grid();
  const std::size_t k = market_.interval(t);
  const double left = grid[k];
  const double right = grid[k + 1];
  const double h = rel_step * (T - t) / 3.0 + 1e-300;

  double vt;
  if (t - h >= left && t + h <= right) {
    vt = (value(t + h, y) - value(t - h, y)) / (2.0 * h);
  } else if (t + 2.0 * h <= right) {
    vt = (-3.0 * value(t, y) + 4.0 * value(t + h, y) - value(t + 2.0 * h, y)) / (2.0 * h);
  } else {
    vt = (3.0 * value(t, y) - 4.0 * value(t - h, y) + value(t - 2.0 * h, y)) / (2.0 * h);
  }
  const auto d = derivs(t, y);
  const double diff = 0.5 * market_.theta_hat_sq(t) * y * y * d.v_yy;
  const double scale = std::abs(vt) + std::abs(diff);
  if (scale == 0.0) return 0.0;
  return std::abs(vt + diff) / scale;
}

double DualSurface::growth_constant() const {
  const double p = dual_.source().growth().p;
  return dual_.dual_growth() * std::exp(p / ((p - 1.0) * (p - 1.0)) * tau(0.0));
}

double hatV(const DualSurface& ds, double t, double y) { return ds.value(t, y); }

DualDerivs hatV_derivs(const DualSurface& ds, double t, double y) { return ds.derivs(t, y); }

WSurface w_surface(const DualSurface& ds, double t, double y) {
  return {ds.w_value(t, y), ds.w_direct(t, y)};
}

double inverse_Y(const DualSurface& ds, double t, double x, double tol, InverseHint* hint) {
  return ds.inverse(t, x, tol, hint);
}

DiagnosticsReport limit_diagnostics(const DualSurface& ds, double t,
                                    const LimitThresholds& thresholds) {
  if (!(t >= 0.0 && t < ds.horizon())) throw DomainError("limit_diagnostics requires t < T");
  DiagnosticsReport rep;
  const auto at6 = ds.derivs(t, 1e-6);
  const double v3 = ds.value(t, 1e-3);
  const double v1 = ds.value(t, 1.0);
  const auto big = ds.derivs(t, 1e6);

  auto detail = [](const std::string& s, double a, double b) {
    std::ostringstream os;
    os << s << ": " << a << " vs " << b;
    return os.str();
  };
  rep.add("blowup_at_zero", at6.v > v3 && v3 > v1,
          detail("V(1e-6), V(1e-3)", at6.v, v3) + ", V(1)=" + std::to_string(v1));
  rep.add("vanishing_at_infinity", big.v < thresholds.eps_tail,
          detail("V(1e6) vs eps", big.v, thresholds.eps_tail));
  rep.add("steep_slope_at_zero", at6.v_y < thresholds.steep_slope,
          detail("V_y(1e-6) vs bound", at6.v_y, thresholds.steep_slope));
  rep.add("flat_slope_at_infinity", std::abs(big.v_y) < thresholds.eps_tail,
          detail("|V_y(1e6)| vs eps", std::abs(big.v_y), thresholds.eps_tail));
  return rep;
}

ResidualSummary dual_pde_residual_grid(const DualSurface& ds, const std::vector<double>& ts,
                                       const std::vector<double>& ys, double rel_step) {
  ResidualSummary out;
  CompensatedSum sum;
  for (double t : ts) {
    for (double y : ys) {
      const double r = ds.pde_residual(t, y, rel_step);
      sum.add(r);
      ++out.points;
      if (r > out.max) {
        out.max = r;
        out.argmax_t = t;
        out.argmax_y = y;
      }
    }
  }
  if (out.points > 0) out.mean = sum.value() / static_cast<double>(out.points);
  return out;
}

DiagnosticsReport dual_growth_check(const DualSurface& ds, const std::vector<double>& ts,
                                    const std::vector<double>& ys) {
  DiagnosticsReport rep;
  const double K = ds.growth_constant();
  const double p = ds.dual_utility().source().growth().p;
  for (double t : ts) {
    for (double y : ys) {
      const double v = ds.value(t, y);
      const double bound = K * (1.0 + std::pow(y, p / (p - 1.0)));
      if (!(v <= bound * (1.0 + 1e-10))) {
        std::ostringstream os;
        os << "V(" << t << ", " << y << ") = " << v << " exceeds " << bound;
        rep.add("dual_growth", false, os.str());
        return rep;
      }
    }
  }
  rep.add("dual_growth", true);
  return rep;
}

}  // namespace dualhjb
