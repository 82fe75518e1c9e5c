#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dualhjb/diagnostics.hpp"

namespace dualhjb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// offset + scale * x^exponent on [0, inf). exponent == 1 is a linear branch.
struct PowerBranch {
  double offset = 0.0;
  double scale = 1.0;
  double exponent = 1.0;

  static PowerBranch linear(double slope, double intercept = 0.0) {
    return {intercept, slope, 1.0};
  }
  static PowerBranch power(double scale, double exponent, double offset = 0.0) {
    return {offset, scale, exponent};
  }

  double value(double x) const;
  double slope(double x) const;
  double curvature(double x) const;
  bool is_linear() const { return exponent == 1.0; }
};

struct PowerTerm {
  double scale = 1.0;
  double exponent = 0.5;
};

/// Constants of the sublinear growth bound 0 <= U(x) <= L (1 + x^p).
struct GrowthCertificate {
  double L = 1.0;
  double p = 0.5;
};

/// Superdifferential [U'(x+), U'(x-)] of a concave utility.
struct SubgradientInterval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double slope, double tol = 0.0) const {
    return slope >= lower - tol && slope <= upper + tol;
  }
  bool is_point(double tol = 1e-12) const { return upper - lower <= tol * (1.0 + upper); }
};

enum class UtilityFamily { Power, MinOfConcavePieces, Tabulated, SumOfPowers, Composite };

std::string to_string(UtilityFamily family);

/// Stretch of the lower envelope of a MinOfConcavePieces family on which one
/// branch is active.
struct EnvelopeSegment {
  double begin = 0.0;
  double end = kInf;
  std::size_t branch = 0;
};

/// Increasing concave hinge map phi(v) = min(v + lift, (1 + k) v - k c + lift)
/// used to build the CVaR-modified utilities.
struct Hinge {
  double gain = 0.0;       // k = lambda * delta
  double threshold = 0.0;  // c = U(x0) - y; the kink of phi
  double lift = 0.0;       // lambda * delta * (U(x0) - y)^+

  double apply(double v) const;
  double left_slope(double v) const;
  double right_slope(double v) const;
};

class UtilityFunction;

/// Immutable, cheaply copyable concave utility on [0, inf).
class UtilityFunction {
 public:
  /// scale * x^p with 0 < p < 1.
  static UtilityFunction power(double p, double scale = 1.0);

  /// Pointwise minimum of concave branches. `declared_crossovers`, when given,
  /// must match the computed envelope breakpoints to 1e-8 relative.
  static UtilityFunction min_of_pieces(std::vector<PowerBranch> branches,
                                       std::optional<std::vector<double>> declared_crossovers = {},
                                       std::optional<GrowthCertificate> growth = {});

  /// Piecewise-linear interpolant through (x_i, u_i), x_0 = 0 = u_0, extended
  /// beyond the last node by a C^1 power tail u_m + A (x^q - x_m^q).
  static UtilityFunction tabulated(std::vector<double> x, std::vector<double> u,
                                   double tail_exponent,
                                   std::optional<GrowthCertificate> growth = {});

  /// sum_i scale_i x^{exponent_i}, all exponents in (0, 1).
  static UtilityFunction sum_of_powers(std::vector<PowerTerm> terms,
                                       std::optional<GrowthCertificate> growth = {});

  /// phi o base for an increasing concave hinge phi.
  static UtilityFunction composite(const UtilityFunction& base, Hinge hinge);

  UtilityFamily family() const;
  std::string describe() const;

  double operator()(double x) const;
  double right_slope(double x) const;  // U'(x+), x >= 0; +inf allowed at 0
  double left_slope(double x) const;   // U'(x-), x > 0
  SubgradientInterval subdifferential(double x) const;

  /// True where U is C^2 in a neighbourhood of x.
  bool twice_differentiable_at(double x) const;
  /// U''(x); throws CapabilityError where the family has a kink at x.
  double second_derivative(double x) const;

  /// Wealth levels where U is not C^1 (envelope crossovers, table nodes, hinge
  /// points), ascending.
  std::vector<double> kinks() const;

  const GrowthCertificate& growth() const { return growth_; }
  bool growth_is_nominal() const { return growth_nominal_; }
  /// Exponent governing x -> inf behaviour (>= 1 means Assumption-style growth fails).
  double tail_exponent() const;
  bool tail_unbounded() const;

  // Family accessors; empty for other families.
  const std::vector<PowerBranch>& branches() const;
  const std::vector<EnvelopeSegment>& envelope() const;
  std::vector<double> crossovers() const;
  const std::vector<double>& table_x() const;
  const std::vector<double>& table_u() const;
  const std::vector<PowerTerm>& terms() const;
  double table_tail_scale() const;
  const UtilityFunction* composite_base() const;
  const Hinge* composite_hinge() const;

 private:
  struct PowerData {
    PowerBranch branch;
  };
  struct PiecewiseData {
    std::vector<PowerBranch> branches;
    std::vector<EnvelopeSegment> envelope;
  };
  struct TableData {
    std::vector<double> x;
    std::vector<double> u;
    std::vector<double> slopes;
    double tail_exponent = 0.5;
    double tail_scale = 0.0;
  };
  struct SumData {
    std::vector<PowerTerm> terms;
  };
  struct CompositeData {
    std::shared_ptr<const UtilityFunction> base;
    Hinge hinge;
  };

  using Storage = std::variant<PowerData, PiecewiseData, TableData, SumData, CompositeData>;

  explicit UtilityFunction(Storage s) : data_(std::move(s)) {}

  std::size_t segment_right(double x) const;  // segment containing [begin, end)
  std::size_t segment_left(double x) const;   // segment containing (begin, end]
  std::size_t table_index(double x) const;

  Storage data_;
  GrowthCertificate growth_;
  bool growth_nominal_ = false;
};

double eval_utility(const UtilityFunction& u, double x);
SubgradientInterval subdiff_utility(const UtilityFunction& u, double x);

struct AssumptionGrid {
  std::vector<double> points;
  double unbounded_threshold = 10.0;

  /// 512 log-spaced points on [1e-6, 1e6].
  static AssumptionGrid standard();
};

/// Checks U(0) = 0, monotonicity, concavity (via sampled slopes), the growth
/// certificate and unboundedness. Failures are report entries, never throws.
DiagnosticsReport validate_assumption1(const UtilityFunction& u,
                                       const AssumptionGrid& grid = AssumptionGrid::standard());

}  // namespace dualhjb
