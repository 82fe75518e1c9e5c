#include "dualhjb/risk_aversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dualhjb/errors.hpp"

namespace dualhjb {

double static_risk_aversion(const UtilityFunction& u, double x) {
  if (!(x > 0.0)) throw DomainError("risk aversion requires x > 0");
  if (!u.twice_differentiable_at(x)) {
    std::ostringstream os;
    os << "static risk aversion undefined at x=" << x << " (" << to_string(u.family())
       << " utility is not C^2 there)";
    throw CapabilityError(os.str());
  }
  return -u.second_derivative(x) / u.right_slope(x);
}

double dynamic_risk_aversion(const PrimalSurface& ps, double t, double x, InverseHint* hint) {
  if (!(x > 0.0)) throw DomainError("risk aversion requires x > 0");
  if (!(t >= 0.0 && t < ps.horizon())) throw DomainError("dynamic risk aversion requires t < T");
  const double y = ps.dual().inverse(t, x, 1e-12, hint);
  return 1.0 / (y * ps.dual().derivs(t, y).v_yy);
}

std::string to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::Increasing: return "increasing";
    case Monotonicity::Decreasing: return "decreasing";
    case Monotonicity::Constant: return "constant";
    case Monotonicity::Mixed: return "mixed";
    case Monotonicity::Undefined: return "undefined";
  }
  return "unknown";
}

std::string to_string(Curvature c) {
  switch (c) {
    case Curvature::Convex: return "convex";
    case Curvature::Concave: return "concave";
    case Curvature::Linear: return "linear";
    case Curvature::Mixed: return "mixed";
  }
  return "unknown";
}

Monotonicity classify_monotone(const std::vector<double>& values, double tol) {
  if (values.size() < 2) return Monotonicity::Undefined;
  bool up = false, down = false, flat = false;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(values[i - 1])) return Monotonicity::Undefined;
    const double d = values[i] - values[i - 1];
    const double scale = tol * std::max({1.0, std::abs(values[i]), std::abs(values[i - 1])});
    if (d > scale) {
      up = true;
    } else if (d < -scale) {
      down = true;
    } else {
      flat = true;
    }
  }
  if (up && !down && !flat) return Monotonicity::Increasing;
  if (down && !up && !flat) return Monotonicity::Decreasing;
  if (flat && !up && !down) return Monotonicity::Constant;
  return Monotonicity::Mixed;
}

Curvature classify_curvature(const std::vector<double>& xs, const std::vector<double>& fs,
                             double tol) {
  if (xs.size() != fs.size() || xs.size() < 3) return Curvature::Mixed;
  bool pos = false, neg = false, zero = false;
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
    const double s1 = (fs[i] - fs[i - 1]) / (xs[i] - xs[i - 1]);
    const double s2 = (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i]);
    const double d = s2 - s1;
    const double scale = tol * std::max({1.0, std::abs(s1), std::abs(s2)});
    if (d > scale) {
      pos = true;
    } else if (d < -scale) {
      neg = true;
    } else {
      zero = true;
    }
  }
  if (pos && !neg && !zero) return Curvature::Convex;
  if (neg && !pos && !zero) return Curvature::Concave;
  if (zero && !pos && !neg) return Curvature::Linear;
  return Curvature::Mixed;
}

MonotonicityReport monotonicity_report(const PrimalSurface& ps, const std::vector<double>& ts,
                                       const std::vector<double>& xs_in) {
  MonotonicityReport rep;
  std::vector<double> xs = xs_in;
  std::sort(xs.begin(), xs.end());
  const auto& u = ps.utility();
  const auto& dual = ps.dual().dual_utility();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> r_static(xs.size(), kNaN);
  bool static_defined = true;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (u.twice_differentiable_at(xs[i])) {
      r_static[i] = static_risk_aversion(u, xs[i]);
    } else {
      static_defined = false;
    }
  }
  rep.static_direction = static_defined ? classify_monotone(r_static) : Monotonicity::Undefined;
  const bool strict_static = rep.static_direction == Monotonicity::Increasing ||
                             rep.static_direction == Monotonicity::Decreasing;

  std::vector<double> log_slope(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) log_slope[i] = std::log(u.right_slope(xs[i]));
  rep.log_marginal_static = classify_curvature(xs, log_slope);

  bool positive = true, direction_ok = true, w_ok = true, log_ok = true;
  std::string positive_detail, direction_detail, w_detail, log_detail;
  bool conjugate_shape_set = false;

  for (double t : ts) {
    if (!(t >= 0.0 && t < ps.horizon())) throw DomainError("monotonicity_report requires t < T");
    InverseHint hint;
    std::vector<double> r_dyn(xs.size()), ys(xs.size()), log_y(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ys[i] = ps.dual().inverse(t, xs[i], 1e-12, &hint);
      r_dyn[i] = 1.0 / (ys[i] * ps.dual().derivs(t, ys[i]).v_yy);
      log_y[i] = std::log(ys[i]);
      rep.rows.push_back({t, xs[i], r_static[i], r_dyn[i]});
      if (!(r_dyn[i] > 0.0) && positive) {
        positive = false;
        std::ostringstream os;
        os << "R(" << t << ", " << xs[i] << ") = " << r_dyn[i];
        positive_detail = os.str();
      }
    }
    const auto dir = classify_monotone(r_dyn);
    rep.dynamic_direction.push_back(dir);
    if (strict_static && dir != rep.static_direction && direction_ok) {
      direction_ok = false;
      direction_detail = "t=" + std::to_string(t) + ": R(t,.) " + to_string(dir) + ", R(.) " +
                         to_string(rep.static_direction);
    }

    // w via the y-derivative identity, on the Y-image of the x grid, ascending in y.
    std::vector<double> yasc(ys.rbegin(), ys.rend());
    std::vector<double> w(yasc.size());
    for (std::size_t i = 0; i < yasc.size(); ++i) w[i] = ps.dual().w_direct(t, yasc[i]);
    const auto w_shape = classify_curvature(yasc, w);
    rep.w_shape.push_back(w_shape);
    if (!conjugate_shape_set) {
      std::vector<double> h(yasc.size());
      for (std::size_t i = 0; i < yasc.size(); ++i) {
        h[i] = yasc[i] * dual.derivative(yasc[i], Side::Right) - dual(yasc[i]);
      }
      rep.conjugate_shape = classify_curvature(yasc, h);
      conjugate_shape_set = true;
    }
    if ((rep.conjugate_shape == Curvature::Convex || rep.conjugate_shape == Curvature::Concave) &&
        w_shape != rep.conjugate_shape && w_ok) {
      w_ok = false;
      w_detail = "t=" + std::to_string(t) + ": w " + to_string(w_shape) + ", y U~' - U~ " +
                 to_string(rep.conjugate_shape);
    }

    const auto log_shape = classify_curvature(xs, log_y);
    rep.log_marginal_dynamic.push_back(log_shape);
    if ((rep.log_marginal_static == Curvature::Convex ||
         rep.log_marginal_static == Curvature::Concave) &&
        log_shape != rep.log_marginal_static && log_ok) {
      log_ok = false;
      log_detail = "t=" + std::to_string(t) + ": ln u_x " + to_string(log_shape) + ", ln U' " +
                   to_string(rep.log_marginal_static);
    }
  }

  rep.diagnostics.add("dynamic_positive", positive, positive_detail);
  if (!strict_static) {
    rep.diagnostics.add("direction_preserved", true,
                        "informational: static R " + to_string(rep.static_direction) + " on grid");
  } else {
    rep.diagnostics.add("direction_preserved", direction_ok, direction_detail);
  }
  rep.diagnostics.add("w_curvature", w_ok,
                      w_ok ? "y U~' - U~ " + to_string(rep.conjugate_shape) : w_detail);
  rep.diagnostics.add("log_marginal_curvature", log_ok,
                      log_ok ? "ln U' " + to_string(rep.log_marginal_static) : log_detail);
  return rep;
}

}  // namespace dualhjb
