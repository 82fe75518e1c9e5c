#include "dualhjb/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dualhjb/errors.hpp"

namespace dualhjb {

namespace {

// Shrinks [a, b] around the boundary of {x : pred(x)} where pred holds at a and
// fails at b. Geometric steps while the bracket spans orders of magnitude.
template <class Pred, class Stop>
void bisect_boundary(double& a, double& b, Pred pred, Stop stop) {
  for (int it = 0; it < 500; ++it) {
    if (b - a <= 1e-15 * b || stop(a, b)) return;
    double mid;
    if (a == 0.0) {
      mid = b / 16.0;
      if (mid == 0.0) return;
    } else if (b > 2.0 * a) {
      mid = std::sqrt(a * b);
    } else {
      mid = 0.5 * (a + b);
    }
    if (pred(mid)) {
      a = mid;
    } else {
      b = mid;
    }
  }
}

// Smallest x with U'(x+) <= y, bracketed as [a, b] with b the answer.
// Returns false if no such x below 1e300 (linear tail with slope >= y).
bool lower_maximizer_bracket(const UtilityFunction& u, double y, double& a, double& b,
                             double value_tol) {
  a = 0.0;
  b = 1.0;
  while (u.right_slope(b) > y) {
    a = b;
    b *= 2.0;
    if (b > 1e300) return false;
  }
  auto steep = [&](double x) { return u.right_slope(x) > y; };
  auto stop = [&](double lo, double hi) {
    if (value_tol <= 0.0 || lo == 0.0) return false;
    // f(x*) - f(lo) <= (x* - lo)(U'(lo+) - y).
    return (hi - lo) * (u.right_slope(lo) - y) <= value_tol;
  };
  bisect_boundary(a, b, steep, stop);
  return true;
}

}  // namespace

double dual_growth_constant(double L, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("growth exponent p must lie in (0,1)");
  if (!(L > 0.0)) throw DomainError("growth constant L must be positive");
  return std::max(L, std::pow(L * p, 1.0 / (1.0 - p)) * (1.0 / p - 1.0));
}

ArgmaxInterval conjugate_argmax_generic(const UtilityFunction& u, double y) {
  if (!(y > 0.0)) throw DomainError("conjugate requires y > 0");
  const double s0 = u.right_slope(0.0);
  if (s0 < y) return {0.0, 0.0};
  double lo = 0.0;
  if (s0 > y) {
    double a = 0.0;
    double b = 0.0;
    if (!lower_maximizer_bracket(u, y, a, b, 0.0)) return {kInf, kInf};
    lo = b;
  }
  // Upper end: sup{x : U'(x-) >= y}. Differs from lo only on a flat stretch.
  const double probe = lo > 0.0 ? lo * (1.0 + 1e-9) + 1e-300 : 1e-300;
  if (u.left_slope(probe) < y) return {lo, lo};
  double a = probe;
  double b = std::max(2.0 * probe, 1.0);
  while (u.left_slope(b) >= y) {
    a = b;
    b *= 2.0;
    if (b > 1e300) return {lo, kInf};
  }
  bisect_boundary(a, b, [&](double x) { return u.left_slope(x) >= y; },
                  [](double, double) { return false; });
  return {lo, a};
}

double eval_conjugate_generic(const UtilityFunction& u, double y, double tol) {
  if (!(y > 0.0)) throw DomainError("conjugate requires y > 0 (U~(0) is infinite)");
  if (u.right_slope(0.0) <= y) return 0.0;
  double a = 0.0;
  double b = 0.0;
  if (!lower_maximizer_bracket(u, y, a, b, tol)) return kInf;
  const double fa = u(a) - a * y;
  const double fb = u(b) - b * y;
  return std::max({fa, fb, 0.0});
}

DualUtility::DualUtility(UtilityFunction u) : source_(std::move(u)) {
  const auto& g = source_.growth();
  dual_growth_ = (g.p > 0.0 && g.p < 1.0 && g.L > 0.0) ? dual_growth_constant(g.L, g.p) : kInf;
  vanishes_from_ = source_.right_slope(0.0);

  switch (source_.family()) {
    case UtilityFamily::Power: closed_form_ = "power"; break;
    case UtilityFamily::MinOfConcavePieces: closed_form_ = "piecewise-envelope"; break;
    case UtilityFamily::Tabulated: closed_form_ = "piecewise-linear-table"; break;
    default: break;
  }

  std::vector<double> bp;
  if (std::isfinite(vanishes_from_) && vanishes_from_ > 0.0) bp.push_back(vanishes_from_);
  for (double x : source_.kinks()) {
    if (!(x > 0.0)) continue;
    bp.push_back(source_.left_slope(x));
    bp.push_back(source_.right_slope(x));
  }
  bp.erase(std::remove_if(bp.begin(), bp.end(),
                          [](double v) { return !(v > 0.0) || !std::isfinite(v); }),
           bp.end());
  std::sort(bp.begin(), bp.end());
  std::vector<double> merged;
  for (double v : bp) {
    if (merged.empty() || v > merged.back() * (1.0 + 1e-13)) merged.push_back(v);
  }
  breakpoints_ = std::move(merged);
}

ArgmaxInterval DualUtility::argmax_power(double y) const {
  const auto& b = source_.branches().empty() ? PowerBranch{} : source_.branches().front();
  (void)b;
  const double p = source_.tail_exponent();
  const double scale = source_.growth().L;
  const double x = std::pow(scale * p / y, 1.0 / (1.0 - p));
  return {x, x};
}

ArgmaxInterval DualUtility::argmax_envelope(double y) const {
  const auto& env = source_.envelope();
  const auto& br = source_.branches();
  double prev_end_slope = kInf;
  for (std::size_t k = 0; k < env.size(); ++k) {
    const auto& seg = env[k];
    const auto& f = br[seg.branch];
    const double s_begin = f.slope(seg.begin);
    // Kink at seg.begin carries slopes [s_begin, prev_end_slope].
    if (y >= s_begin && y <= prev_end_slope) {
      if (f.is_linear() && y == s_begin) return {seg.begin, seg.end};
      return {seg.begin, seg.begin};
    }
    const double s_end = std::isfinite(seg.end)
                             ? f.slope(seg.end)
                             : (f.is_linear() ? f.scale : (f.exponent < 1.0 ? 0.0 : kInf));
    if (!f.is_linear() && y > s_end && y < s_begin) {
      double x = std::pow(y / (f.scale * f.exponent), 1.0 / (f.exponent - 1.0));
      x = std::clamp(x, seg.begin, seg.end);
      return {x, x};
    }
    prev_end_slope = s_end;
  }
  return {kInf, kInf};
}

ArgmaxInterval DualUtility::argmax_table(double y) const {
  const auto& xs = source_.table_x();
  const auto& us = source_.table_u();
  const std::size_t m = xs.size() - 1;
  // Segment slopes are nonincreasing; node i (>=1) carries [s_i, s_{i-1}].
  auto slope = [&](std::size_t i) { return (us[i + 1] - us[i]) / (xs[i + 1] - xs[i]); };
  if (y >= slope(0)) {
    return y == slope(0) ? ArgmaxInterval{0.0, xs[1]} : ArgmaxInterval{0.0, 0.0};
  }
  const double last = slope(m - 1);
  if (y < last) {
    const double q = source_.tail_exponent();
    const double x = std::pow(y / (source_.table_tail_scale() * q), 1.0 / (q - 1.0));
    const double xc = std::max(x, xs[m]);
    return {xc, xc};
  }
  // Binary search for the first segment i with slope(i) <= y.
  std::size_t lo = 0;
  std::size_t hi = m - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (slope(mid) <= y) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const std::size_t i = lo;  // node index of the kink is i
  if (y == slope(i)) return {xs[i], xs[i + 1]};
  return {xs[i], xs[i]};
}

ArgmaxInterval DualUtility::maximizers(double y) const {
  if (!(y > 0.0)) throw DomainError("conjugate requires y > 0");
  if (y >= vanishes_from_) {
    if (y == vanishes_from_) return conjugate_argmax_generic(source_, y);
    return {0.0, 0.0};
  }
  switch (source_.family()) {
    case UtilityFamily::Power: return argmax_power(y);
    case UtilityFamily::MinOfConcavePieces: return argmax_envelope(y);
    case UtilityFamily::Tabulated: return argmax_table(y);
    case UtilityFamily::SumOfPowers: return argmax_smooth(y);
    default: return conjugate_argmax_generic(source_, y);
  }
}

double DualUtility::operator()(double y) const {
  if (!(y > 0.0)) throw DomainError("U~ is infinite at y <= 0");
  if (y >= vanishes_from_) return 0.0;
  if (source_.family() == UtilityFamily::Power) {
    const double p = source_.tail_exponent();
    const double x = argmax_power(y).lo;
    return x * y * (1.0 - p) / p;
  }
  const auto arg = maximizers(y);
  if (!std::isfinite(arg.lo)) return kInf;
  return std::max(0.0, source_(arg.lo) - arg.lo * y);
}

double DualUtility::derivative(double y, Side side) const {
  if (!(y > 0.0)) throw DomainError("U~' requires y > 0");
  if (y > vanishes_from_) return 0.0;
  const auto arg = maximizers(y);
  return side == Side::Left ? -arg.hi : -arg.lo;
}

double DualUtility::growth_bound(double y) const {
  const double p = source_.growth().p;
  return dual_growth_ * (1.0 + std::pow(y, p / (p - 1.0)));
}

// Strictly concave C^2 utility: Newton on ln U'(e^s) = ln y, safeguarded by a
// bracket in s since ln U'(e^s) is strictly decreasing.
ArgmaxInterval DualUtility::argmax_smooth(double y) const {
  const double ly = std::log(y);
  auto g = [&](double s) { return std::log(source_.right_slope(std::exp(s))) - ly; };
  double lo = 0.0, hi = 0.0;
  if (g(0.0) > 0.0) {
    hi = 1.0;
    while (g(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > 700.0) return {kInf, kInf};
    }
  } else {
    lo = -1.0;
    while (g(lo) <= 0.0) {
      hi = lo;
      lo *= 2.0;
      if (lo < -700.0) return {0.0, 0.0};
    }
  }
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, std::abs(s)); ++it) {
    const double x = std::exp(s);
    const double gs = g(s);
    if (gs == 0.0) break;
    if (gs > 0.0) {
      lo = s;
    } else {
      hi = s;
    }
    const double dg = x * source_.second_derivative(x) / source_.right_slope(x);
    double next = s - gs / dg;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * std::max(1.0, std::abs(s))) {
      s = next;
      break;
    }
    s = next;
  }
  const double x = std::exp(s);
  return {x, x};
}

DualUtility conjugate(const UtilityFunction& u) { return DualUtility(u); }

DiagnosticsReport validate_dual_utility(const DualUtility& dual, const std::vector<double>& y_grid,
                                        const std::vector<double>& x_grid) {
  DiagnosticsReport rep;
  std::vector<double> ys = y_grid;
  std::sort(ys.begin(), ys.end());
  std::vector<double> v(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) v[i] = dual(ys[i]);

  auto fmt = [](const char* what, double at) {
    std::ostringstream os;
    os << what << " at y=" << at;
    return os.str();
  };

  bool nonneg = true;
  bool decreasing = true;
  bool convex = true;
  bool growth = true;
  std::string dn, dd, dc, dg;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (v[i] < 0.0 && nonneg) {
      nonneg = false;
      dn = fmt("negative value", ys[i]);
    }
    if (i > 0 && v[i] > v[i - 1] + 1e-12 * std::max(1.0, v[i - 1]) && decreasing) {
      decreasing = false;
      dd = fmt("increase", ys[i]);
    }
    if (i > 0 && i + 1 < ys.size() && convex) {
      // Divided second difference on a nonuniform grid.
      const double h0 = ys[i] - ys[i - 1];
      const double h1 = ys[i + 1] - ys[i];
      const double d2 = ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0) * 2.0 / (h0 + h1);
      const double scale = std::max({1.0, std::abs(v[i - 1]), std::abs(v[i + 1])});
      if (d2 * h0 * h1 < -1e-10 * scale) {
        convex = false;
        dc = fmt("negative second difference", ys[i]);
      }
    }
    if (v[i] > dual.growth_bound(ys[i]) * (1.0 + 1e-12) && growth) {
      growth = false;
      dg = fmt("L-hat bound exceeded", ys[i]);
    }
  }
  rep.add("nonnegative", nonneg, dn);
  rep.add("nonincreasing", decreasing, dd);
  rep.add("convex", convex, dc);
  rep.add("dual_growth", growth, dg);

  bool fy = true;
  std::string dfy;
  for (double x : x_grid) {
    const double ux = dual.source()(x);
    for (std::size_t i = 0; i < ys.size() && fy; ++i) {
      if (v[i] + x * ys[i] < ux - 1e-12 * std::max(1.0, std::abs(ux))) {
        fy = false;
        std::ostringstream os;
        os << "Fenchel-Young fails at x=" << x << ", y=" << ys[i];
        dfy = os.str();
      }
    }
  }
  rep.add("fenchel_young", fy, dfy);
  return rep;
}

}  // namespace dualhjb
