#include "dualhjb/utility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dualhjb/errors.hpp"
#include "dualhjb/grid.hpp"

namespace dualhjb {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// Relative closeness used to decide whether x sits on a breakpoint.
bool at_point(double x, double point) {
  return std::abs(x - point) <= 1e-12 * std::max(1.0, std::abs(point));
}

double min_branch_value(const std::vector<PowerBranch>& branches, double x) {
  double best = kInf;
  for (const auto& b : branches) best = std::min(best, b.value(x));
  return best;
}

// Index of the branch that is lowest just to the right of x.
std::size_t lowest_after(const std::vector<PowerBranch>& branches, double x) {
  const double probe = x > 0.0 ? x * (1.0 + 1e-9) : 1e-14;
  std::size_t best = 0;
  double best_v = kInf;
  double best_at = kInf;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const double at = branches[i].value(x);
    const double v = branches[i].value(probe);
    // Primary key: value at x; ties resolved by the value slightly to the right.
    const double tol = 1e-12 * std::max(1.0, std::abs(at));
    if (at < best_at - tol || (std::abs(at - best_at) <= tol && v < best_v)) {
      best = i;
      best_v = v;
      best_at = at;
    }
  }
  return best;
}

// Smallest x > start at which `other` drops strictly below `active`, or +inf.
double first_undercut(const PowerBranch& active, const PowerBranch& other, double start) {
  auto gap = [&](double x) {
    const double a = active.value(x);
    const double o = other.value(x);
    return o - a + 1e-13 * std::max(1.0, std::abs(a));
  };
  constexpr int kPerDecade = 200;
  constexpr double kUpper = 1e15;
  double lo = start > 0.0 ? start : 1e-12;
  const double ratio = std::pow(10.0, 1.0 / kPerDecade);
  if (start <= 0.0 && gap(lo) < 0.0) return lo;
  while (lo < kUpper) {
    const double hi = lo * ratio;
    if (gap(hi) < 0.0) {
      double a = lo;
      double b = hi;
      for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        const double m = 0.5 * (a + b);
        if (gap(m) < 0.0) {
          b = m;
        } else {
          a = m;
        }
      }
      // Bisect the exact equality point (without the tolerance shift). The
      // shifted root sits past the crossing, so restart one grid step back.
      auto raw = [&](double x) { return other.value(x) - active.value(x); };
      double c = std::max(lo / ratio, start);
      if (!(raw(c) > 0.0)) c = a;
      double d = b;
      for (int it = 0; it < 200 && d - c > 1e-16 * d; ++it) {
        const double m = 0.5 * (c + d);
        if (raw(m) <= 0.0) {
          d = m;
        } else {
          c = m;
        }
      }
      return std::max(d, start > 0.0 ? start * (1.0 + 1e-15) : d);
    }
    lo = hi;
  }
  return kInf;
}

std::vector<EnvelopeSegment> build_envelope(const std::vector<PowerBranch>& branches) {
  std::vector<EnvelopeSegment> segs;
  double x = 0.0;
  double seg_begin = 0.0;
  std::size_t active = lowest_after(branches, 0.0);
  for (std::size_t guard = 0; guard < 64 * branches.size() + 64; ++guard) {
    double next = kInf;
    for (std::size_t j = 0; j < branches.size(); ++j) {
      if (j == active) continue;
      next = std::min(next, first_undercut(branches[active], branches[j], x));
    }
    if (!std::isfinite(next)) {
      segs.push_back({seg_begin, kInf, active});
      return segs;
    }
    // A touch without a crossing leaves the active branch unchanged.
    const std::size_t nxt = lowest_after(branches, next);
    if (nxt != active) {
      segs.push_back({seg_begin, next, active});
      seg_begin = next;
      active = nxt;
    }
    x = next;
  }
  throw ConfigError("min_of_pieces: envelope construction did not terminate");
}

}  // namespace

double PowerBranch::value(double x) const {
  if (exponent == 1.0) return offset + scale * x;
  return offset + scale * std::pow(x, exponent);
}

double PowerBranch::slope(double x) const {
  if (exponent == 1.0) return scale;
  if (x <= 0.0) {
    if (scale == 0.0) return 0.0;
    return exponent < 1.0 ? (scale > 0.0 ? kInf : -kInf) : 0.0;
  }
  return scale * exponent * std::pow(x, exponent - 1.0);
}

double PowerBranch::curvature(double x) const {
  if (exponent == 1.0) return 0.0;
  return scale * exponent * (exponent - 1.0) * std::pow(x, exponent - 2.0);
}

double Hinge::apply(double v) const {
  return std::min(v + lift, (1.0 + gain) * v - gain * threshold + lift);
}
double Hinge::left_slope(double v) const { return v <= threshold ? 1.0 + gain : 1.0; }
double Hinge::right_slope(double v) const { return v < threshold ? 1.0 + gain : 1.0; }

std::string to_string(UtilityFamily family) {
  switch (family) {
    case UtilityFamily::Power: return "power";
    case UtilityFamily::MinOfConcavePieces: return "min_of_pieces";
    case UtilityFamily::Tabulated: return "tabulated";
    case UtilityFamily::SumOfPowers: return "sum_of_powers";
    case UtilityFamily::Composite: return "composite";
  }
  return "unknown";
}

UtilityFunction UtilityFunction::power(double p, double scale) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("p must lie in (0,1)");
  if (!finite_positive(scale)) throw ConfigError("power utility scale must be positive");
  UtilityFunction u(PowerData{PowerBranch::power(scale, p)});
  u.growth_ = {scale, p};
  return u;
}

UtilityFunction UtilityFunction::min_of_pieces(std::vector<PowerBranch> branches,
                                               std::optional<std::vector<double>> declared,
                                               std::optional<GrowthCertificate> growth) {
  if (branches.empty()) throw ConfigError("min_of_pieces needs at least one branch");
  for (const auto& b : branches) {
    if (!std::isfinite(b.offset) || !std::isfinite(b.scale) || !(b.scale >= 0.0) ||
        !finite_positive(b.exponent)) {
      throw ConfigError("min_of_pieces: branch parameters must be finite, scale >= 0, exponent > 0");
    }
  }
  auto env = build_envelope(branches);
  if (declared) {
    std::vector<double> computed;
    for (std::size_t i = 1; i < env.size(); ++i) computed.push_back(env[i].begin);
    if (computed.size() != declared->size()) {
      std::ostringstream os;
      os << "min_of_pieces: declared " << declared->size() << " crossover(s), envelope has "
         << computed.size();
      throw ConfigError(os.str());
    }
    for (std::size_t i = 0; i < computed.size(); ++i) {
      const double d = (*declared)[i];
      if (std::abs(d - computed[i]) > 1e-8 * std::max(1.0, std::abs(computed[i]))) {
        std::ostringstream os;
        os << "min_of_pieces: crossover[" << i << "] declared " << d << " but computed "
           << computed[i];
        throw ConfigError(os.str());
      }
    }
  }
  const PowerBranch tail = branches[env.back().branch];
  UtilityFunction u(PiecewiseData{std::move(branches), std::move(env)});
  if (growth) {
    u.growth_ = *growth;
  } else if (tail.exponent < 1.0 && tail.scale > 0.0) {
    // U <= tail branch <= max(offset, scale) (1 + x^q).
    u.growth_ = {std::max({tail.offset, tail.scale, 1e-300}), tail.exponent};
  } else {
    u.growth_ = {1.0, 0.5};
    u.growth_nominal_ = true;
  }
  return u;
}

UtilityFunction UtilityFunction::tabulated(std::vector<double> x, std::vector<double> u,
                                           double tail_exponent,
                                           std::optional<GrowthCertificate> growth) {
  if (x.size() != u.size() || x.size() < 2) {
    throw ConfigError("tabulated: x and u must have equal length >= 2");
  }
  if (x.front() != 0.0 || u.front() != 0.0) throw ConfigError("tabulated: first node must be (0, 0)");
  if (!(tail_exponent > 0.0 && tail_exponent < 1.0)) {
    throw ConfigError("tabulated: tail exponent must lie in (0,1)");
  }
  std::vector<double> slopes(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (!(x[i + 1] > x[i])) throw ConfigError("tabulated: x must be strictly increasing");
    if (!(u[i + 1] > u[i])) throw ConfigError("tabulated: u must be strictly increasing");
    slopes[i] = (u[i + 1] - u[i]) / (x[i + 1] - x[i]);
    if (i > 0 && slopes[i] > slopes[i - 1] * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "tabulated: interpolant not concave at node " << i;
      throw ConfigError(os.str());
    }
  }
  const double xm = x.back();
  const double tail_scale = slopes.back() * std::pow(xm, 1.0 - tail_exponent) / tail_exponent;
  TableData data{std::move(x), std::move(u), std::move(slopes), tail_exponent, tail_scale};
  UtilityFunction out(std::move(data));
  if (growth) {
    out.growth_ = *growth;
  } else {
    // sup_x U(x) / (1 + x^q): attained on the table or approached in the tail.
    const auto& td = std::get<TableData>(out.data_);
    double L = tail_scale;
    for (double v : logspace(1e-8, 1e8, 4097)) {
      L = std::max(L, out(v) / (1.0 + std::pow(v, tail_exponent)));
    }
    for (std::size_t i = 0; i < td.x.size(); ++i) {
      L = std::max(L, td.u[i] / (1.0 + std::pow(td.x[i], tail_exponent)));
    }
    out.growth_ = {L * (1.0 + 1e-9), tail_exponent};
  }
  return out;
}

UtilityFunction UtilityFunction::sum_of_powers(std::vector<PowerTerm> terms,
                                               std::optional<GrowthCertificate> growth) {
  if (terms.empty()) throw ConfigError("sum_of_powers needs at least one term");
  double L = 0.0;
  double p = 0.0;
  for (const auto& t : terms) {
    if (!finite_positive(t.scale)) throw ConfigError("sum_of_powers: scale must be positive");
    if (!(t.exponent > 0.0 && t.exponent < 1.0)) {
      throw ConfigError("sum_of_powers: exponents must lie in (0,1)");
    }
    L += t.scale;
    p = std::max(p, t.exponent);
  }
  UtilityFunction u(SumData{std::move(terms)});
  u.growth_ = growth.value_or(GrowthCertificate{L, p});
  return u;
}

UtilityFunction UtilityFunction::composite(const UtilityFunction& base, Hinge hinge) {
  if (!(hinge.gain >= 0.0) || !std::isfinite(hinge.threshold) || !(hinge.lift >= 0.0)) {
    throw ConfigError("composite: invalid hinge");
  }
  UtilityFunction u(CompositeData{std::make_shared<const UtilityFunction>(base), hinge});
  // phi(U) <= U + lift <= (L + lift)(1 + x^p).
  u.growth_ = {base.growth().L + hinge.lift, base.growth().p};
  u.growth_nominal_ = base.growth_nominal_;
  return u;
}

UtilityFamily UtilityFunction::family() const {
  return std::visit(Overloaded{
                        [](const PowerData&) { return UtilityFamily::Power; },
                        [](const PiecewiseData&) { return UtilityFamily::MinOfConcavePieces; },
                        [](const TableData&) { return UtilityFamily::Tabulated; },
                        [](const SumData&) { return UtilityFamily::SumOfPowers; },
                        [](const CompositeData&) { return UtilityFamily::Composite; },
                    },
                    data_);
}

std::string UtilityFunction::describe() const {
  std::ostringstream os;
  os.precision(10);
  std::visit(Overloaded{
                 [&](const PowerData& d) {
                   os << "power(p=" << d.branch.exponent << ", scale=" << d.branch.scale << ")";
                 },
                 [&](const PiecewiseData& d) {
                   os << "min_of_pieces[";
                   for (std::size_t i = 0; i < d.branches.size(); ++i) {
                     const auto& b = d.branches[i];
                     if (i) os << ", ";
                     os << b.offset << "+" << b.scale << "*x^" << b.exponent;
                   }
                   os << "]";
                 },
                 [&](const TableData& d) {
                   os << "tabulated(" << d.x.size() << " nodes, tail q=" << d.tail_exponent << ")";
                 },
                 [&](const SumData& d) {
                   os << "sum_of_powers[";
                   for (std::size_t i = 0; i < d.terms.size(); ++i) {
                     if (i) os << ", ";
                     os << d.terms[i].scale << "*x^" << d.terms[i].exponent;
                   }
                   os << "]";
                 },
                 [&](const CompositeData& d) {
                   os << "hinge(gain=" << d.hinge.gain << ", c=" << d.hinge.threshold
                      << ") o " << d.base->describe();
                 },
             },
             data_);
  return os.str();
}

std::size_t UtilityFunction::segment_right(double x) const {
  const auto& env = std::get<PiecewiseData>(data_).envelope;
  // Last segment whose begin <= x.
  auto it = std::upper_bound(env.begin(), env.end(), x,
                             [](double v, const EnvelopeSegment& s) { return v < s.begin; });
  return it == env.begin() ? 0 : static_cast<std::size_t>(it - env.begin() - 1);
}

std::size_t UtilityFunction::segment_left(double x) const {
  const auto& env = std::get<PiecewiseData>(data_).envelope;
  // First segment whose end >= x.
  auto it = std::lower_bound(env.begin(), env.end(), x,
                             [](const EnvelopeSegment& s, double v) { return s.end < v; });
  return it == env.end() ? env.size() - 1 : static_cast<std::size_t>(it - env.begin());
}

std::size_t UtilityFunction::table_index(double x) const {
  const auto& xs = std::get<TableData>(data_).x;
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  return static_cast<std::size_t>(it - xs.begin()) - 1;
}

double UtilityFunction::operator()(double x) const {
  if (!(x >= 0.0)) throw DomainError("utility evaluated at negative wealth");
  return std::visit(
      Overloaded{
          [&](const PowerData& d) { return d.branch.value(x); },
          [&](const PiecewiseData& d) { return min_branch_value(d.branches, x); },
          [&](const TableData& d) {
            if (x >= d.x.back()) {
              return d.u.back() +
                     d.tail_scale * (std::pow(x, d.tail_exponent) -
                                     std::pow(d.x.back(), d.tail_exponent));
            }
            const std::size_t i = table_index(x);
            return d.u[i] + d.slopes[i] * (x - d.x[i]);
          },
          [&](const SumData& d) {
            double s = 0.0;
            for (const auto& t : d.terms) s += t.scale * std::pow(x, t.exponent);
            return s;
          },
          [&](const CompositeData& d) { return d.hinge.apply((*d.base)(x)); },
      },
      data_);
}

double UtilityFunction::right_slope(double x) const {
  if (!(x >= 0.0)) throw DomainError("slope requested at negative wealth");
  return std::visit(
      Overloaded{
          [&](const PowerData& d) { return d.branch.slope(x); },
          [&](const PiecewiseData& d) {
            return d.branches[d.envelope[segment_right(x)].branch].slope(x);
          },
          [&](const TableData& d) {
            if (x >= d.x.back()) {
              return d.tail_scale * d.tail_exponent * std::pow(x, d.tail_exponent - 1.0);
            }
            return d.slopes[table_index(x)];
          },
          [&](const SumData& d) {
            if (x <= 0.0) return kInf;
            double s = 0.0;
            for (const auto& t : d.terms) s += t.scale * t.exponent * std::pow(x, t.exponent - 1.0);
            return s;
          },
          [&](const CompositeData& d) {
            const double s = d.base->right_slope(x);
            return s == 0.0 ? 0.0 : d.hinge.right_slope((*d.base)(x)) * s;
          },
      },
      data_);
}

double UtilityFunction::left_slope(double x) const {
  if (!(x > 0.0)) throw DomainError("left slope requires x > 0");
  return std::visit(
      Overloaded{
          [&](const PowerData& d) { return d.branch.slope(x); },
          [&](const PiecewiseData& d) {
            return d.branches[d.envelope[segment_left(x)].branch].slope(x);
          },
          [&](const TableData& d) {
            if (x > d.x.back()) {
              return d.tail_scale * d.tail_exponent * std::pow(x, d.tail_exponent - 1.0);
            }
            auto it = std::lower_bound(d.x.begin(), d.x.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - d.x.begin());
            return d.slopes[i - 1];
          },
          [&](const SumData&) { return right_slope(x); },
          [&](const CompositeData& d) {
            const double s = d.base->left_slope(x);
            return s == 0.0 ? 0.0 : d.hinge.left_slope((*d.base)(x)) * s;
          },
      },
      data_);
}

SubgradientInterval UtilityFunction::subdifferential(double x) const {
  if (!(x > 0.0)) throw DomainError("subdifferential requires x > 0");
  return {right_slope(x), left_slope(x)};
}

bool UtilityFunction::twice_differentiable_at(double x) const {
  if (!(x > 0.0)) return false;
  return std::visit(
      Overloaded{
          [&](const PowerData&) { return true; },
          [&](const PiecewiseData& d) {
            for (std::size_t i = 1; i < d.envelope.size(); ++i) {
              if (at_point(x, d.envelope[i].begin)) return false;
            }
            return true;
          },
          [&](const TableData&) { return false; },
          [&](const SumData&) { return true; },
          [&](const CompositeData& d) {
            if (!d.base->twice_differentiable_at(x)) return false;
            const double v = (*d.base)(x);
            return d.hinge.gain == 0.0 || !at_point(v, d.hinge.threshold);
          },
      },
      data_);
}

double UtilityFunction::second_derivative(double x) const {
  if (!twice_differentiable_at(x)) {
    std::ostringstream os;
    os << to_string(family()) << " utility is not twice differentiable at x=" << x;
    throw CapabilityError(os.str());
  }
  return std::visit(
      Overloaded{
          [&](const PowerData& d) { return d.branch.curvature(x); },
          [&](const PiecewiseData& d) {
            return d.branches[d.envelope[segment_right(x)].branch].curvature(x);
          },
          [&](const TableData&) { return 0.0; },
          [&](const SumData& d) {
            double s = 0.0;
            for (const auto& t : d.terms) {
              s += t.scale * t.exponent * (t.exponent - 1.0) * std::pow(x, t.exponent - 2.0);
            }
            return s;
          },
          [&](const CompositeData& d) {
            return d.hinge.right_slope((*d.base)(x)) * d.base->second_derivative(x);
          },
      },
      data_);
}

double UtilityFunction::tail_exponent() const {
  return std::visit(
      Overloaded{
          [](const PowerData& d) { return d.branch.exponent; },
          [](const PiecewiseData& d) { return d.branches[d.envelope.back().branch].exponent; },
          [](const TableData& d) { return d.tail_exponent; },
          [](const SumData& d) {
            double p = 0.0;
            for (const auto& t : d.terms) p = std::max(p, t.exponent);
            return p;
          },
          [](const CompositeData& d) { return d.base->tail_exponent(); },
      },
      data_);
}

bool UtilityFunction::tail_unbounded() const {
  return std::visit(
      Overloaded{
          [](const PowerData&) { return true; },
          [](const PiecewiseData& d) { return d.branches[d.envelope.back().branch].scale > 0.0; },
          [](const TableData& d) { return d.tail_scale > 0.0; },
          [](const SumData&) { return true; },
          [](const CompositeData& d) { return d.base->tail_unbounded(); },
      },
      data_);
}

namespace {
const std::vector<PowerBranch> kNoBranches;
const std::vector<EnvelopeSegment> kNoSegments;
const std::vector<double> kNoDoubles;
const std::vector<PowerTerm> kNoTerms;
}  // namespace

const std::vector<PowerBranch>& UtilityFunction::branches() const {
  if (auto* d = std::get_if<PiecewiseData>(&data_)) return d->branches;
  return kNoBranches;
}
const std::vector<EnvelopeSegment>& UtilityFunction::envelope() const {
  if (auto* d = std::get_if<PiecewiseData>(&data_)) return d->envelope;
  return kNoSegments;
}
std::vector<double> UtilityFunction::crossovers() const {
  std::vector<double> out;
  const auto& env = envelope();
  for (std::size_t i = 1; i < env.size(); ++i) out.push_back(env[i].begin);
  return out;
}
const std::vector<double>& UtilityFunction::table_x() const {
  if (auto* d = std::get_if<TableData>(&data_)) return d->x;
  return kNoDoubles;
}
const std::vector<double>& UtilityFunction::table_u() const {
  if (auto* d = std::get_if<TableData>(&data_)) return d->u;
  return kNoDoubles;
}
const std::vector<PowerTerm>& UtilityFunction::terms() const {
  if (auto* d = std::get_if<SumData>(&data_)) return d->terms;
  return kNoTerms;
}
double UtilityFunction::table_tail_scale() const {
  if (auto* d = std::get_if<TableData>(&data_)) return d->tail_scale;
  return 0.0;
}
const UtilityFunction* UtilityFunction::composite_base() const {
  if (auto* d = std::get_if<CompositeData>(&data_)) return d->base.get();
  return nullptr;
}
const Hinge* UtilityFunction::composite_hinge() const {
  if (auto* d = std::get_if<CompositeData>(&data_)) return &d->hinge;
  return nullptr;
}

std::vector<double> UtilityFunction::kinks() const {
  std::vector<double> out = std::visit(
      Overloaded{
          [](const PowerData&) { return std::vector<double>{}; },
          [this](const PiecewiseData&) { return crossovers(); },
          [](const TableData& d) { return std::vector<double>(d.x.begin() + 1, d.x.end()); },
          [](const SumData&) { return std::vector<double>{}; },
          [](const CompositeData& d) {
            std::vector<double> k = d.base->kinks();
            const double c = d.hinge.threshold;
            if (d.hinge.gain > 0.0 && c > 0.0) {
              // Base is increasing and unbounded: bracket and bisect U(x) = c.
              double lo = 0.0;
              double hi = 1.0;
              while ((*d.base)(hi) < c && hi < 1e300) hi *= 2.0;
              for (int it = 0; it < 300 && hi - lo > 1e-16 * hi; ++it) {
                const double m = 0.5 * (lo + hi);
                if ((*d.base)(m) < c) {
                  lo = m;
                } else {
                  hi = m;
                }
              }
              k.push_back(hi);
            }
            return k;
          },
      },
      data_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double eval_utility(const UtilityFunction& u, double x) { return u(x); }

SubgradientInterval subdiff_utility(const UtilityFunction& u, double x) {
  return u.subdifferential(x);
}

AssumptionGrid AssumptionGrid::standard() { return {logspace(1e-6, 1e6, 512), 10.0}; }

DiagnosticsReport validate_assumption1(const UtilityFunction& u, const AssumptionGrid& grid) {
  DiagnosticsReport rep;
  if (grid.points.empty()) {
    rep.add("grid", false, "empty validation grid");
    return rep;
  }
  std::vector<double> xs = grid.points;
  std::sort(xs.begin(), xs.end());

  const double u0 = u(0.0);
  rep.add("zero_at_origin", u0 == 0.0, u0 == 0.0 ? "" : "U(0) = " + std::to_string(u0));

  std::vector<double> vals(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) vals[i] = u(xs[i]);

  {
    bool ok = true;
    std::string detail;
    double prev_x = 0.0;
    double prev_v = u0;
    for (std::size_t i = 0; i < xs.size() && ok; ++i) {
      if (vals[i] < prev_v - 1e-12 * std::max(1.0, std::abs(prev_v))) {
        ok = false;
        detail = "U decreases between x=" + std::to_string(prev_x) + " and x=" + std::to_string(xs[i]);
      }
      prev_x = xs[i];
      prev_v = vals[i];
    }
    rep.add("nondecreasing", ok, detail);
  }

  {
    // Secant slopes over consecutive samples must be nonincreasing.
    bool ok = true;
    std::string detail;
    double prev_slope = kInf;
    double px = 0.0;
    double pv = u0;
    for (std::size_t i = 0; i < xs.size() && ok; ++i) {
      const double s = (vals[i] - pv) / (xs[i] - px);
      if (s > prev_slope + 1e-9 * std::max(1.0, std::abs(prev_slope))) {
        ok = false;
        detail = "secant slope increases near x=" + std::to_string(xs[i]);
      }
      prev_slope = s;
      px = xs[i];
      pv = vals[i];
    }
    rep.add("concave", ok, detail);
  }

  {
    const auto& g = u.growth();
    bool ok = g.L > 0.0 && g.p > 0.0 && g.p < 1.0;
    std::string detail = ok ? "" : "certificate exponent outside (0,1)";
    if (u.tail_exponent() >= 1.0) {
      ok = false;
      detail = "tail grows at least linearly (exponent " + std::to_string(u.tail_exponent()) + ")";
    }
    for (std::size_t i = 0; i < xs.size() && ok; ++i) {
      const double bound = g.L * (1.0 + std::pow(xs[i], g.p));
      if (vals[i] < 0.0 || vals[i] > bound * (1.0 + 1e-12)) {
        ok = false;
        detail = "0 <= U(x) <= L(1+x^p) violated at x=" + std::to_string(xs[i]);
      }
    }
    rep.add("growth", ok, detail);
  }

  {
    const bool ok = vals.back() > grid.unbounded_threshold && u.tail_unbounded();
    rep.add("unbounded", ok,
            ok ? "" : "U(" + std::to_string(xs.back()) + ") = " + std::to_string(vals.back()));
  }
  return rep;
}

}  // namespace dualhjb
