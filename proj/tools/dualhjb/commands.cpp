#include "commands.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include <dualhjb/cvar.hpp>
#include <dualhjb/errors.hpp>
#include <dualhjb/grid.hpp>
#include <dualhjb/primal_value.hpp>
#include <dualhjb/risk_aversion.hpp>
#include <dualhjb/simulation.hpp>

namespace dualhjb::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row_strings(header);
  }
  void row(std::initializer_list<std::string> cells) { row_strings(std::vector<std::string>(cells)); }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

class Stopwatch {
 public:
  explicit Stopwatch(RunReport& r) : report_(r) {}
  template <class F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(name, t0);
    } else {
      auto v = f();
      record(name, t0);
      return v;
    }
  }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    report_.timings.emplace_back(
        name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  RunReport& report_;
};

struct Context {
  const ScenarioConfig& cfg;
  fs::path dir;
  RunReport& report;
  Stopwatch clock;

  fs::path file(const std::string& name) {
    report.outputs.push_back(name);
    return dir / name;
  }
  EffectiveMarket market() {
    return clock.stage("market", [&] { return EffectiveMarket(cfg.market); });
  }
  PrimalSurface primal(const EffectiveMarket& em) {
    return clock.stage("surface", [&] {
      return PrimalSurface(DualSurface(conjugate(cfg.utility), em, cfg.quadrature));
    });
  }
};

void add_check(DiagnosticsReport& d, const std::string& name, const ControlCheck& c,
               double reference) {
  std::ostringstream os;
  os.precision(10);
  os << "mean=" << c.estimate.mean << " se=" << c.estimate.std_error << " reference=" << reference
     << " z=" << c.z_score;
  d.add(name, c.passed, os.str());
}

void cmd_solve_dual(Context& ctx) {
  const auto em = ctx.market();
  const DualSurface ds(conjugate(ctx.cfg.utility), em, ctx.cfg.quadrature);
  const auto& d = ds.dual_utility();
  ctx.report.diagnostics.merge(
      validate_dual_utility(d, ctx.cfg.output.y_grid, ctx.cfg.output.x_grid), "conjugate.");
  bool convex = true;
  std::string convex_detail;
  std::size_t underflow = 0;
  ctx.clock.stage("dual_grid", [&] {
    Csv csv(ctx.file("dual_surface.csv"),
            {"t", "y", "tau", "hatV", "hatV_y", "hatV_yy", "w", "residual"});
    for (double t : ctx.cfg.output.t_grid) {
      for (double y : ctx.cfg.output.y_grid) {
        const auto v = ds.derivs(t, y);
        const double r = ds.pde_residual(t, y);
        // Kernel mass on the support of U~ below the smallest double.
        if (v.v == 0.0 && v.v_yy == 0.0) {
          ++underflow;
        } else if (!(v.v_yy > 0.0) && convex) {
          convex = false;
          convex_detail = "V_yy(" + fmt(t) + ", " + fmt(y) + ") = " + fmt(v.v_yy);
        }
        csv.row({fmt(t), fmt(y), fmt(ds.tau(t)), fmt(v.v), fmt(v.v_y), fmt(v.v_yy),
                 fmt(y * v.v_y - v.v), fmt(r)});
      }
    }
  });
  if (convex && underflow > 0) {
    convex_detail = std::to_string(underflow) + " points with V underflowing to 0 skipped";
  }
  ctx.report.diagnostics.add("strict_convexity", convex, convex_detail);
  LimitThresholds lt;
  lt.eps_tail = ctx.cfg.output.eps_tail;
  ctx.report.diagnostics.merge(limit_diagnostics(ds, ctx.cfg.output.t_grid.front(), lt), "limits.");
  ctx.report.diagnostics.merge(
      dual_growth_check(ds, ctx.cfg.output.t_grid, ctx.cfg.output.y_grid), "growth.");
}

void cmd_solve_primal(Context& ctx) {
  const auto em = ctx.market();
  const auto ps = ctx.primal(em);
  bool concave = true;
  std::string concave_detail;
  double worst = 0.0;
  std::string worst_at;
  ctx.clock.stage("primal_grid", [&] {
    const int n = ctx.cfg.market.dim();
    std::vector<std::string> header{"t", "x", "y", "u", "u_t", "u_x", "u_xx"};
    for (int i = 0; i < n; ++i) header.push_back("pi_star_" + std::to_string(i));
    header.push_back("residual");
    Csv csv(ctx.file("primal_surface.csv"), header);
    for (double t : ctx.cfg.output.t_grid) {
      InverseHint hint;
      for (double x : ctx.cfg.output.x_grid) {
        const auto d = ps.derivs(t, x, &hint);
        const auto pi = ps.control(t, x, &hint);
        const double r = hjb_residual(ps, t, x, 2.5e-4, &hint);
        if (!(d.u_xx < 0.0) && concave) {
          concave = false;
          concave_detail = "u_xx(" + fmt(t) + ", " + fmt(x) + ") = " + fmt(d.u_xx);
        }
        if (!(r <= worst)) {
          worst = r;
          worst_at = "(" + fmt(t) + ", " + fmt(x) + ")";
        }
        std::vector<std::string> row{fmt(t), fmt(x), fmt(d.y), fmt(d.u), fmt(d.u_t), fmt(d.u_x), fmt(d.u_xx)};
        for (int i = 0; i < n; ++i) row.push_back(fmt(pi.pi(i)));
        row.push_back(fmt(r));
        csv.row_strings(row);
      }
    }
  });
  ctx.report.diagnostics.add("strict_concavity", concave, concave_detail);
  ctx.report.diagnostics.add("hjb_residual", worst <= 1e-4, "max " + fmt(worst) + " at " + worst_at);
  ctx.report.diagnostics.merge(
      growth_check(ps, ctx.cfg.output.t_grid, ctx.cfg.output.x_grid), "growth.");
}

void cmd_control(Context& ctx) {
  const auto em = ctx.market();
  const auto ps = ctx.primal(em);
  const int n = ctx.cfg.market.dim();
  std::vector<std::string> header{"t", "x", "rho"};
  for (int i = 0; i < n; ++i) header.push_back("pi_" + std::to_string(i));
  ctx.clock.stage("control_grid", [&] {
    Csv csv(ctx.file("control.csv"), header);
    for (double t : ctx.cfg.output.t_grid) {
      InverseHint hint;
      for (double x : ctx.cfg.output.x_grid) {
        const double rho = ps.control_scale(t, x, &hint);
        const auto c = ps.control(t, x, &hint);  // throws if pi* leaves the cone
        std::vector<std::string> row{fmt(t), fmt(x), fmt(rho)};
        for (int i = 0; i < n; ++i) row.push_back(fmt(c.pi(i)));
        csv.row_strings(row);
      }
    }
  });
  ctx.report.diagnostics.add("control_in_cone", true);
}

void write_paths(Context& ctx, const std::string& name, const PathBatchResult& batch) {
  Csv csv(ctx.file(name), {"path", "terminal_wealth", "control_norm"});
  for (std::size_t i = 0; i < batch.terminal_wealth.size(); ++i) {
    csv.row({std::to_string(i), fmt(batch.terminal_wealth[i]), fmt(batch.control_norms[i])});
  }
}

void cmd_simulate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto em = ctx.market();
  const auto ps = ctx.primal(em);
  const double u0 = ps.value(0.0, cfg.x0);
  const auto grid = simulation_time_grid(cfg.market, cfg.simulation.steps_per_year,
                                         cfg.simulation.time_grading);
  const OptimalControlTable table = ctx.clock.stage(
      "control_table", [&] { return OptimalControlTable(ps, grid, cfg.x0, cfg.control_table); });
  const auto batch = ctx.clock.stage(
      "paths", [&] { return simulate_wealth(em, table, cfg.x0, cfg.simulation); });
  const auto eu = batch.estimate([&](double x) { return cfg.utility(x); });
  const auto ex = batch.estimate([](double x) { return x; });
  const auto nov = novikov_diagnostic(batch);
  {
    Csv csv(ctx.file("simulate_summary.csv"),
            {"control", "paths", "steps", "u0", "mean_U", "se_U", "z", "mean_X", "se_X",
             "novikov_mean", "novikov_max"});
    const double z = eu.std_error > 0.0 ? (eu.mean - u0) / eu.std_error : 0.0;
    csv.row({"optimal", std::to_string(batch.terminal_wealth.size()),
             std::to_string(grid.size() - 1), fmt(u0), fmt(eu.mean), fmt(eu.std_error), fmt(z),
             fmt(ex.mean), fmt(ex.std_error), fmt(nov.mean), fmt(nov.max)});
    ctx.report.diagnostics.add("value_within_4se", std::abs(z) <= 4.0, "z=" + fmt(z));
  }
  // Heuristic evidence only, so it never fails the run.
  ctx.report.diagnostics.add("novikov", true,
                             std::string(nov.divergence_suspected ? "divergence suspected, " : "") +
                                 "max/mean=" + fmt(nov.max_over_mean) +
                                 (nov.overflow_clamped ? " (clamped)" : ""));
  if (cfg.output.write_paths) write_paths(ctx, "paths.csv", batch);
}

void cmd_verify(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto em = ctx.market();
  const auto ps = ctx.primal(em);
  const auto vr = ctx.clock.stage(
      "verify_value", [&] { return verify_value(ps, cfg.market, cfg.simulation, cfg.x0); });
  const auto pr = ctx.clock.stage("duality_pairing", [&] {
    return duality_pairing_check(ps, em, cfg.market, cfg.simulation, cfg.x0);
  });
  Csv csv(ctx.file("verify.csv"),
          {"check", "control", "mean", "se", "reference", "z", "passed"});
  auto emit = [&](const std::string& check, const ControlCheck& c, double ref) {
    csv.row({check, c.name, fmt(c.estimate.mean), fmt(c.estimate.std_error), fmt(ref),
             fmt(c.z_score), c.passed ? "1" : "0"});
    add_check(ctx.report.diagnostics, check + "." + c.name, c, ref);
  };
  emit("value", vr.optimal, vr.u0);
  for (const auto& c : vr.basket) emit("value", c, vr.u0);
  emit("pairing", pr.optimal, pr.target);
  for (const auto& c : pr.basket) emit("pairing", c, pr.target);
}

void cmd_cvar_frontier(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto em = ctx.market();
  const PipelineContext pc{em, cfg.quadrature};
  const CvarSpec base{cfg.cvar.beta, 0.0, cfg.x0};
  const auto points = ctx.clock.stage("frontier", [&] {
    return frontier_sweep(cfg.utility, base, cfg.cvar.lambdas, pc, cfg.simulation, cfg.control_table);
  });
  Csv csv(ctx.file("frontier.csv"), {"lambda", "y_star", "value", "utility_mc", "utility_se",
                                     "cvar_mc", "cvar_se", "var_mc"});
  bool coherent = true;
  for (const auto& p : points) {
    csv.row({fmt(p.lambda), fmt(p.y_star), fmt(p.value), fmt(p.utility.mean),
             fmt(p.utility.std_error), fmt(p.cvar), fmt(p.cvar_se), fmt(p.var)});
    coherent = coherent && p.cvar >= p.var;
  }
  ctx.report.diagnostics.add("cvar_at_least_var", coherent);
  // Frontier ordering is meaningful along increasing lambda.
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a].lambda < points[b].lambda; });
  bool monotone = true;
  std::string detail;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& a = points[order[i - 1]];
    const auto& b = points[order[i]];
    const double slack = 3.0 * std::hypot(a.cvar_se, b.cvar_se);
    if (b.cvar > a.cvar + slack && monotone) {
      monotone = false;
      detail = "cvar rises from lambda=" + fmt(a.lambda) + " to " + fmt(b.lambda);
    }
  }
  ctx.report.diagnostics.add("cvar_nonincreasing_in_lambda", monotone, detail);
}

void cmd_risk_profile(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto em = ctx.market();
  const auto ps = ctx.primal(em);
  const auto rep = ctx.clock.stage(
      "risk_profile", [&] { return monotonicity_report(ps, cfg.risk.t, cfg.risk.x); });
  Csv csv(ctx.file("risk_profile.csv"), {"t", "x", "R_static", "R_dynamic", "static_direction",
                                         "dynamic_direction", "w_shape", "direction_match"});
  const std::size_t nx = cfg.risk.x.size();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    const std::size_t ti = i / nx;
    const auto dyn = rep.dynamic_direction[ti];
    const bool match = dyn == rep.static_direction;
    csv.row({fmt(r.t), fmt(r.x), std::isnan(r.r_static) ? "undefined" : fmt(r.r_static),
             fmt(r.r_dynamic), to_string(rep.static_direction), to_string(dyn),
             to_string(rep.w_shape[ti]), match ? "1" : "0"});
  }
  ctx.report.diagnostics.merge(rep.diagnostics, "risk.");
}

void cmd_selftest(Context& ctx) {
  // Merton oracle: U = x^{1/2}, b = 0.2, sigma = 0.4, K = R, T = 1.
  ScenarioConfig m = merton_scenario();
  m.simulation = ctx.cfg.simulation;
  m.control_table = ctx.cfg.control_table;
  m.quadrature = ctx.cfg.quadrature;
  const EffectiveMarket em = ctx.clock.stage("market", [&] { return EffectiveMarket(m.market); });
  const PrimalSurface ps = ctx.clock.stage("surface", [&] {
    return PrimalSurface(DualSurface(conjugate(m.utility), em, m.quadrature));
  });
  const double tau0 = em.tau_at(0.0);
  Csv csv(ctx.file("selftest.csv"),
          {"check", "point", "value", "reference", "error", "tolerance", "passed"});
  auto rel = [](double v, double r) { return std::abs(v - r) / std::abs(r); };
  auto record = [&](const std::string& name, const std::vector<std::array<double, 4>>& rows,
                    double tol) {
    // rows: point, value, reference, error
    bool ok = true;
    for (const auto& r : rows) {
      const bool pass = r[3] <= tol;
      ok = ok && pass;
      csv.row({name, fmt(r[0]), fmt(r[1]), fmt(r[2]), fmt(r[3]), fmt(tol), pass ? "1" : "0"});
    }
    ctx.report.diagnostics.add(name, ok);
  };

  ctx.clock.stage("oracles", [&] {
    std::vector<std::array<double, 4>> rows;
    for (double x : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double v = ps.value(0.0, x);
      const double ref = std::sqrt(x) * std::exp(tau0);
      rows.push_back({x, v, ref, rel(v, ref)});
    }
    record("merton_value", rows, 1e-6);
    rows.clear();
    for (double x : {0.1, 1.0, 10.0}) {
      for (double t : {0.0, 0.5, 0.9}) {
        const double pi = ps.control(t, x).pi(0);
        rows.push_back({x, pi, 2.5, std::abs(pi - 2.5)});
      }
    }
    record("merton_control", rows, 1e-6);
    rows.clear();
    // U~(y) = 1/(4y), so V(t,y) = e^{2 tau} / (4y).
    for (double t : {0.0, 0.5}) {
      for (double y : logspace(1e-2, 1e2, 9)) {
        const double v = ps.dual().value(t, y);
        const double ref = std::exp(2.0 * em.tau_at(t)) / (4.0 * y);
        rows.push_back({y, v, ref, rel(v, ref)});
      }
    }
    record("dual_oracle", rows, 1e-8);
  });

  const auto vr = ctx.clock.stage("verify_value", [&] {
    return verify_value(ps, m.market, m.simulation, m.x0);
  });
  csv.row({"mc_value_z", fmt(m.x0), fmt(vr.optimal.estimate.mean), fmt(vr.u0),
           fmt(std::abs(vr.optimal.z_score)), "3", vr.optimal.passed ? "1" : "0"});
  add_check(ctx.report.diagnostics, "mc_value", vr.optimal, vr.u0);
  for (const auto& c : vr.basket) {
    csv.row({"mc_basket_" + c.name, fmt(m.x0), fmt(c.estimate.mean), fmt(vr.u0), fmt(c.z_score), "3",
             c.passed ? "1" : "0"});
    add_check(ctx.report.diagnostics, "mc_basket." + c.name, c, vr.u0);
  }
}

using Handler = std::function<void(Context&)>;

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> h{
      {"solve-dual", cmd_solve_dual},       {"solve-primal", cmd_solve_primal},
      {"control", cmd_control},             {"simulate", cmd_simulate},
      {"verify", cmd_verify},               {"cvar-frontier", cmd_cvar_frontier},
      {"risk-profile", cmd_risk_profile},   {"selftest", cmd_selftest},
  };
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, _] : handlers()) n.push_back(name);
    return n;
  }();
  return names;
}

void set_seed(ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.simulation.seed = seed;
  auto j = json::parse(cfg.canonical);
  j["seed"] = seed;
  cfg.canonical = j.dump();
}

RunReport run_subcommand(const std::string& name, const ScenarioConfig& cfg,
                         const std::string& out_dir) {
  const Handler* handler = nullptr;
  for (const auto& [n, h] : handlers()) {
    if (n == name) handler = &h;
  }
  if (handler == nullptr) throw ConfigError("unknown subcommand '" + name + "'");

  RunReport report;
  report.command = name;
  report.scenario_hash = fnv1a(cfg.canonical);
  fs::create_directories(out_dir);
  Context ctx{cfg, fs::path(out_dir), report, Stopwatch(report)};
  (*handler)(ctx);

  json checks = json::array();
  for (const auto& c : report.diagnostics.checks()) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  std::vector<std::string> manifest = report.outputs;
  manifest.push_back("report.json");
  manifest.push_back("timings.json");
  json rj = {{"command", name},
             {"scenario_hash", hex64(report.scenario_hash)},
             {"config", json::parse(cfg.canonical)},
             {"checks", checks},
             {"outputs", manifest},
             {"passed", report.passed()}};
  std::ofstream(fs::path(out_dir) / "report.json") << rj.dump(2) << '\n';

  // Wall-clock timings are the only nondeterministic output, so they live apart.
  json tj = json::object();
  for (const auto& [stage, secs] : report.timings) tj[stage] = secs;
  std::ofstream(fs::path(out_dir) / "timings.json") << json{{"stages", tj}}.dump(2) << '\n';
  return report;
}

}  // namespace dualhjb::app
