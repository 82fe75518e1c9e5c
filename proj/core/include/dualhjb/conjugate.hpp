#pragma once

#include <string>
#include <vector>

#include "dualhjb/utility.hpp"

namespace dualhjb {

enum class Side { Left, Right };

/// Set of maximizers of x -> U(x) - x y; a single point except where U has a
/// linear stretch of slope exactly y.
struct ArgmaxInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// L-hat = max{L, (L p)^{1/(1-p)} (1/p - 1)}: the constant in
/// U~(y) <= L-hat (1 + y^{p/(p-1)}).
double dual_growth_constant(double L, double p);

/// sup_{x>=0} (U(x) - x y) by bisection on the optimality condition y in dU(x).
/// Accurate to absolute `tol` in the value.
double eval_conjugate_generic(const UtilityFunction& u, double y, double tol = 1e-10);

/// Maximizer interval found by the same bisection.
ArgmaxInterval conjugate_argmax_generic(const UtilityFunction& u, double y);

/// The convex conjugate U~(y) = sup_{x>=0} {U(x) - x y} of a utility.
///
/// Uses a closed form where the family admits one (power, min of power/linear
/// branches, piecewise-linear tables with a power tail) and the bisection
/// solver otherwise. U~ is decreasing, convex, vanishes for y >= U'(0+) and
/// has derivative -x*(y) where x*(y) is the maximizer.
class DualUtility {
 public:
  explicit DualUtility(UtilityFunction u);

  double operator()(double y) const;
  /// One-sided derivative; Left gives U~'(y-) = -max argmax, Right -min argmax.
  double derivative(double y, Side side = Side::Right) const;
  ArgmaxInterval maximizers(double y) const;

  /// y-values where U~ fails to be C^2, ascending. Quadrature splits here.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  /// U'(0+); U~(y) = 0 for y at or above this value (+inf for Inada-type utilities).
  double vanishes_from() const { return vanishes_from_; }

  double dual_growth() const { return dual_growth_; }
  /// L-hat (1 + y^{p/(p-1)}).
  double growth_bound(double y) const;

  bool has_closed_form() const { return !closed_form_.empty(); }
  const std::string& closed_form() const { return closed_form_; }
  const UtilityFunction& source() const { return source_; }

 private:
  ArgmaxInterval argmax_power(double y) const;
  ArgmaxInterval argmax_envelope(double y) const;
  ArgmaxInterval argmax_table(double y) const;
  ArgmaxInterval argmax_smooth(double y) const;

  UtilityFunction source_;
  std::vector<double> breakpoints_;
  double vanishes_from_ = kInf;
  double dual_growth_ = 0.0;
  std::string closed_form_;
};

DualUtility conjugate(const UtilityFunction& u);

/// Sampled checks that U~ is nonincreasing, convex, nonnegative, obeys the
/// L-hat growth bound and the Fenchel-Young inequality against U.
DiagnosticsReport validate_dual_utility(const DualUtility& dual, const std::vector<double>& y_grid,
                                        const std::vector<double>& x_grid);

}  // namespace dualhjb
