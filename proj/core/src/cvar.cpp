#include "dualhjb/cvar.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dualhjb/errors.hpp"
#include "dualhjb/grid.hpp"
#include "dualhjb/primal_value.hpp"

namespace dualhjb {

void CvarSpec::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("application.cvar.beta must lie in (0,1)");
  if (!(lambda >= 0.0)) throw ConfigError("application.cvar.lambda must be >= 0");
  if (!(x0 > 0.0)) throw ConfigError("application.cvar.x0 must be positive");
}

UtilityFunction build_modified_utility(const UtilityFunction& u, const CvarSpec& spec, double y) {
  spec.validate();
  const double c = u(spec.x0) - y;
  const double k = spec.lambda * spec.delta();
  // Hinge never active: U(x) >= 0 >= c.
  if (k == 0.0 || c <= 0.0) return u;

  UtilityFunction out = [&]() {
    std::vector<PowerBranch> base;
    if (u.family() == UtilityFamily::Power) {
      const double p = u.growth().p;
      base.push_back(PowerBranch::power(u(1.0), p));
    } else if (u.family() == UtilityFamily::MinOfConcavePieces) {
      base = u.branches();
    } else {
      return UtilityFunction::composite(u, Hinge{k, c, k * c});
    }
    // phi(min f_i) = min_i min(f_i + k c, (1 + k) f_i) since c > 0.
    std::vector<PowerBranch> pieces;
    for (const auto& f : base) {
      pieces.push_back({f.offset + k * c, f.scale, f.exponent});
      pieces.push_back({(1.0 + k) * f.offset, (1.0 + k) * f.scale, f.exponent});
    }
    GrowthCertificate g{u.growth().L + k * c, u.growth().p};
    return UtilityFunction::min_of_pieces(std::move(pieces), std::nullopt, g);
  }();

  const auto rep = validate_assumption1(out);
  if (!rep.passed()) {
    std::ostringstream os;
    os << "modified utility at y=" << y << " fails the utility assumptions:";
    for (const auto& ch : rep.checks()) {
      if (!ch.passed) os << " " << ch.name << " (" << ch.detail << ")";
    }
    throw SolverError(os.str());
  }
  return out;
}

double inner_value(const CvarSpec& spec, double y, const UtilityFunction& u,
                   const PipelineContext& ctx) {
  PrimalSurface ps(DualSurface(conjugate(build_modified_utility(u, spec, y)), ctx.market,
                               ctx.quadrature));
  return ps.value(0.0, spec.x0);
}

double outer_objective(const CvarSpec& spec, double y, const UtilityFunction& u,
                       const PipelineContext& ctx) {
  const double ux0 = u(spec.x0);
  return inner_value(spec, y, u, ctx) - spec.lambda * spec.delta() * std::max(ux0 - y, 0.0) -
         spec.lambda * y;
}

OuterResult outer_optimize(const CvarSpec& spec, const UtilityFunction& u,
                           const PipelineContext& ctx, double tol,
                           std::optional<std::pair<double, double>> bracket) {
  spec.validate();
  OuterResult r;
  const double ux0 = u(spec.x0);
  auto g = [&](double y) {
    ++r.evaluations;
    return outer_objective(spec, y, u, ctx);
  };
  double lo = bracket ? bracket->first : ux0 - 10.0 * (1.0 + std::abs(ux0));
  double hi = bracket ? bracket->second : ux0;
  if (!(lo < hi)) throw DomainError("outer_optimize needs lo < hi");

  if (spec.lambda == 0.0) {
    // g is constant in y.
    r.y_star = hi;
    r.value = g(hi);
    r.lo = lo;
    r.hi = hi;
    return r;
  }

  constexpr double kGold = 0.6180339887498949;
  double a = hi - kGold * (hi - lo);
  double ga = g(a);
  double glo = g(lo);
  int expansions = 0;
  while (glo > ga) {
    if (++expansions > 40) {
      std::ostringstream os;
      os << "outer bracket expansion cap reached: g(" << lo << ")=" << glo << ", g(" << hi
         << ")=" << g(hi);
      throw SolverError(os.str());
    }
    const double width = hi - lo;
    hi = a;
    lo = hi - 2.0 * width;
    a = hi - kGold * (hi - lo);
    ga = g(a);
    glo = g(lo);
  }

  double b = lo + kGold * (hi - lo);
  double gb = g(b);
  // Maintain lo < a < b < hi with golden ratios.
  if (a > b) {
    std::swap(a, b);
    std::swap(ga, gb);
  }
  while (hi - lo > tol * std::max(1.0, std::abs(0.5 * (lo + hi)))) {
    if (ga >= gb) {
      hi = b;
      b = a;
      gb = ga;
      a = hi - kGold * (hi - lo);
      ga = g(a);
    } else {
      lo = a;
      a = b;
      ga = gb;
      b = lo + kGold * (hi - lo);
      gb = g(b);
    }
  }
  if (ga >= gb) {
    r.y_star = a;
    r.value = ga;
  } else {
    r.y_star = b;
    r.value = gb;
  }
  r.lo = lo;
  r.hi = hi;
  return r;
}

CvarVar cvar_var_of_sample(std::vector<double> losses, double beta) {
  if (losses.empty()) throw DomainError("cvar_var_of_sample on an empty sample");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0,1)");
  std::sort(losses.begin(), losses.end());
  const std::size_t n = losses.size();
  const double delta = 1.0 / (1.0 - beta);

  // suffix[k] = sum_{i >= k} z_i.
  std::vector<double> suffix(n + 1, 0.0);
  {
    CompensatedSum s;
    for (std::size_t i = n; i-- > 0;) {
      s.add(losses[i]);
      suffix[i] = s.value();
    }
  }
  // F(z_k) = z_k + delta / n sum_{i > k} (z_i - z_k); ties contribute zero.
  std::vector<double> f(n);
  double best = kInf;
  for (std::size_t k = 0; k < n; ++k) {
    const double tail = suffix[k + 1] - static_cast<double>(n - k - 1) * losses[k];
    f[k] = losses[k] + delta * tail / static_cast<double>(n);
    best = std::min(best, f[k]);
  }
  const double slack = 1e-12 * std::max(1.0, std::abs(best));
  for (std::size_t k = 0; k < n; ++k) {
    if (f[k] <= best + slack) return {best, losses[k]};
  }
  return {best, losses.back()};
}

CvarVar cvar_var_order_statistic(std::vector<double> losses, double beta) {
  if (losses.empty()) throw DomainError("cvar_var_order_statistic on an empty sample");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0,1)");
  std::sort(losses.begin(), losses.end());
  const std::size_t n = losses.size();
  const double nd = static_cast<double>(n);
  // 1-based k = ceil(beta n), guarded against beta n landing just above an integer.
  auto k = static_cast<std::size_t>(std::ceil(beta * nd * (1.0 - 1e-12)));
  k = std::clamp<std::size_t>(k, 1, n);
  CompensatedSum tail;
  for (std::size_t i = k; i < n; ++i) tail.add(losses[i]);
  const double var = losses[k - 1];
  const double cvar = ((static_cast<double>(k) / nd - beta) * var + tail.value() / nd) / (1.0 - beta);
  return {cvar, var};
}

std::vector<FrontierPoint> frontier_sweep(const UtilityFunction& u, const CvarSpec& base,
                                          const std::vector<double>& lambdas,
                                          const PipelineContext& ctx, const SimConfig& cfg,
                                          const ControlTableConfig& table) {
  base.validate();
  cfg.validate();
  const auto grid = simulation_time_grid(ctx.market.params(), cfg.steps_per_year, cfg.time_grading);
  const double ux0 = u(base.x0);
  std::vector<FrontierPoint> out;
  for (double lambda : lambdas) {
    CvarSpec spec = base;
    spec.lambda = lambda;
    const auto opt = outer_optimize(spec, u, ctx);
    PrimalSurface ps(DualSurface(conjugate(build_modified_utility(u, spec, opt.y_star)),
                                 ctx.market, ctx.quadrature));
    OptimalControlTable control(ps, grid, spec.x0, table);
    const auto batch = simulate_wealth(ctx.market, control, spec.x0, cfg);

    FrontierPoint p;
    p.lambda = lambda;
    p.y_star = opt.y_star;
    p.value = opt.value;
    p.utility = batch.estimate([&](double x) { return u(x); });
    std::vector<double> losses(batch.terminal_wealth.size());
    for (std::size_t i = 0; i < losses.size(); ++i) losses[i] = ux0 - u(batch.terminal_wealth[i]);
    const auto cv = cvar_var_of_sample(losses, spec.beta);
    p.cvar = cv.cvar;
    p.var = cv.var;
    // Standard error of the Rockafellar-Uryasev integrand at the fitted VaR.
    std::vector<double> psi(losses.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
      psi[i] = cv.var + spec.delta() * std::max(losses[i] - cv.var, 0.0);
    }
    p.cvar_se = estimate_mean(psi, batch.antithetic).std_error;
    out.push_back(p);
  }
  return out;
}

}  // namespace dualhjb
