// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when a criterion fails unexpectedly; see criterion 9 for the one failure the
// suite anticipates and explains.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <dualhjb/cvar.hpp>
#include <dualhjb/errors.hpp>
#include <dualhjb/grid.hpp>
#include <dualhjb/risk_aversion.hpp>
#include <dualhjb/simulation.hpp>

#include "oracles.hpp"
#include "qp_instances.hpp"
#include "scenarios.hpp"

namespace fs = std::filesystem;
using namespace dualhjb;

namespace {

struct Outcome {
  bool passed = false;
  bool anticipated_failure = false;  // faithful check of a statement that cannot hold
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double rel_err(double a, double ref) { return std::abs(a - ref) / std::max(std::abs(ref), 1e-300); }

SimConfig acceptance_sim() {
  SimConfig cfg;
  cfg.paths = 100000;
  cfg.steps_per_year = 250;
  cfg.time_grading = 4.0;
  return cfg;
}

// Criterion 1.
Outcome merton_oracle() {
  Stopwatch sw;
  const auto ps = scenario::primal_surface(UtilityFunction::power(0.5));
  double value_err = 0.0;
  for (double x : logspace(0.1, 10.0, 21)) {
    value_err = std::max(value_err, rel_err(u_value(ps, 0.0, x), std::sqrt(x) * std::exp(0.125)));
  }
  double control_err = 0.0;
  for (double t : {0.0, 0.25, 0.5, 0.75, 0.99}) {
    for (double x : logspace(0.1, 10.0, 21)) {
      control_err = std::max(control_err, std::abs(optimal_control(ps, t, x).pi(0) - 2.5));
    }
  }
  const double secs = sw.seconds();
  Outcome o;
  o.passed = value_err <= 1e-6 && control_err <= 1e-6 && secs < 5.0;
  o.detail = "max rel err u(0,x) " + sci(value_err) + " (tol 1e-6), max |pi* - 2.5| " +
             sci(control_err) + " (tol 1e-6), " + sci(secs) + " s (limit 5 s)";
  return o;
}

// Criterion 2.
Outcome dual_quadrature_oracle() {
  Stopwatch sw;
  double worst = 0.0;
  for (double r : {0.5, 1.0, 2.0}) {
    const auto ds = scenario::dual_surface(scenario::inverse_power_dual(r));
    for (double t : {0.0, 0.5 * ds.horizon()}) {
      for (double y : logspace(1e-2, 1e2, 81)) {
        const double ref = oracle::lognormal_inverse_moment(y, r, ds.tau(t));
        worst = std::max(worst, rel_err(hatV(ds, t, y), ref));
      }
    }
  }
  const double secs = sw.seconds();
  Outcome o;
  o.passed = worst <= 1e-8 && secs < 1.0;
  o.detail = "max rel err " + sci(worst) + " over r in {0.5,1,2}, 81 y in [1e-2,1e2], t in {0,T/2} "
             "(tol 1e-8), " + sci(secs) + " s (limit 1 s)";
  return o;
}

// Criterion 3.
Outcome nonsmooth_smoothing() {
  const auto ps = scenario::primal_surface(scenario::kinked_utility());
  const auto& ds = ps.dual();
  const double T = ps.horizon();
  // 50 times with log-spaced time to go in [0.01, T]; t in [0, T - 0.01].
  std::vector<double> ts;
  for (double s : logspace(0.01, T, 50)) ts.push_back(T - s);
  std::sort(ts.begin(), ts.end());
  ts.front() = 0.0;
  // y reaches into the flat region y >= 1 of the conjugate; beyond y ~ 6 the
  // kernel mass at t = T - 0.01 underflows double precision.
  const auto ys = logspace(0.01, 4.0, 50);
  const auto xs = logspace(0.05, 20.0, 50);

  std::size_t vyy_bad = 0;
  std::size_t flat_points = 0;
  double min_vyy = kInf;
  for (double t : ts) {
    for (double y : ys) {
      const double v = hatV_derivs(ds, t, y).v_yy;
      if (!(v > 0.0)) ++vyy_bad;
      if (y >= 1.0) ++flat_points;
      min_vyy = std::min(min_vyy, v);
    }
  }
  std::size_t uxx_bad = 0;
  double max_uxx = -kInf;
  for (double t : ts) {
    InverseHint hint;
    for (double x : xs) {
      const double v = ps.derivs(t, x, &hint).u_xx;
      if (!(v < 0.0)) ++uxx_bad;
      max_uxx = std::max(max_uxx, v);
    }
  }
  const auto study = hjb_refinement_study(ps, ts, xs, 1e-3);

  Outcome o;
  o.passed = vyy_bad == 0 && uxx_bad == 0 && study.fine.max <= 1e-4 && study.observed_order >= 1.5;
  o.detail = "V_yy<=0 at " + std::to_string(vyy_bad) + "/2500 (min " + sci(min_vyy) + ", " +
             std::to_string(flat_points) + " points with y >= 1), u_xx>=0 at " +
             std::to_string(uxx_bad) + "/2500 (max " + sci(max_uxx) + "); HJB residual max " +
             sci(study.coarse.max) + " -> " + sci(study.fine.max) + " on halving the step (tol 1e-4), "
             "observed order " + sci(study.observed_order) + " (need >= 1.5)";
  return o;
}

// Criterion 4.
Outcome cone_qp_certification() {
  std::mt19937_64 rng(20240917);
  double kkt = 0.0;
  double membership = 0.0;
  double g_oracle = 0.0;
  double g_identity = 0.0;
  int oracle_count = 0;
  std::map<std::string, int> kinds;
  for (int i = 0; i < 100; ++i) {
    const auto in = qp::random_instance(rng);
    ++kinds[std::to_string(in.n) + "d-" + in.label];
    const EffectiveMarket em(MarketParams::constant(in.b, in.sigma, 1.0, in.cone, 1e-6), 1e-8);
    const auto& c = em.certificate(0);
    kkt = std::max({kkt, c.complementarity, c.generator_violation});

    // Df(pi_hat) = 2 (sigma')^{-1} theta_hat must lie in K. Distances are
    // relative to the unconstrained gradient so theta_hat = 0 is not 0/0.
    const auto st = in.sigma.transpose().fullPivLu();
    const Eigen::VectorXd df = 2.0 * st.solve(em.theta_hat(0));
    const double scale = std::max({df.norm(), 2.0 * st.solve(em.theta(0)).norm(), 1e-300});
    double miss = in.cone.distance(df) / scale;
    if (in.sector && !in.sector->whole() && df.norm() > 1e-8 * scale) {
      // Angle test independent of the library projection.
      double ang = std::atan2(df(1), df(0)) - in.sector->start;
      ang = std::fmod(std::fmod(ang, 2.0 * std::numbers::pi) + 2.0 * std::numbers::pi,
                      2.0 * std::numbers::pi);
      const double over = ang - in.sector->width;
      const double gap = over <= 0.0 ? 0.0 : std::min(over, 2.0 * std::numbers::pi - ang);
      miss = std::max(miss, std::sin(std::min(gap, std::numbers::pi / 2.0)));
    }
    membership = std::max(membership, miss);

    const auto dir = optimal_direction(in.a, 0.0, em);
    const double g_lib = dir.g_value;
    g_identity = std::max(g_identity,
                          std::abs(direction_objective(dir.pi_star, in.a, 0.0, em.params()) - g_lib));
    if (in.n == 1) {
      const double lo = in.cone.kind() == ConeKind::NonnegOrthant ? 0.0 : -200.0;
      const auto scan = oracle::scan_min(
          [&](double p) {
            Eigen::VectorXd pi(1);
            pi(0) = p;
            return direction_objective(pi, in.a, 0.0, em.params());
          },
          lo, 200.0);
      g_oracle = std::max(g_oracle, std::abs(scan.second - g_lib));
      ++oracle_count;
    } else if (in.n == 2) {
      const double ref = oracle::min_direction_objective(in.a, in.b, in.sigma, *in.sector);
      g_oracle = std::max(g_oracle, std::abs(ref - g_lib));
      ++oracle_count;
    }
  }
  Outcome o;
  o.passed = kkt <= 1e-8 && membership <= 1e-8 && g_oracle <= 1e-8 && g_identity <= 1e-10;
  std::string mix;
  for (const auto& [k, v] : kinds) mix += (mix.empty() ? "" : ", ") + k + " x" + std::to_string(v);
  o.detail = "100 instances (" + mix + "); max KKT residual " + sci(kkt) +
             ", max Df(pi_hat) distance to K " + sci(membership) + " (tol 1e-8); |g(pi*) - grid| max " +
             sci(g_oracle) + " over " + std::to_string(oracle_count) + " instances with n <= 2 (tol 1e-8)";
  return o;
}

// Criterion 5.
Outcome conjugacy_round_trips() {
  double primal_err = 0.0;
  double dual_err = 0.0;
  std::string worst;
  for (const auto& [name, u] : {std::pair{std::string("power"), UtilityFunction::power(0.5)},
                                std::pair{std::string("kinked"), scenario::kinked_utility()}}) {
    const auto ps = scenario::primal_surface(u);
    const auto& ds = ps.dual();
    for (double t : {0.0, 0.5}) {
      for (double x : logspace(0.1, 10.0, 9)) {
        const auto inf = oracle::golden_max(
            [&](double s) { return -(hatV(ds, t, std::exp(s)) + x * std::exp(s)); }, -12.0, 12.0);
        const double e = rel_err(-inf.second, u_value(ps, t, x));
        if (e > primal_err) {
          primal_err = e;
          worst = name + " inf_y at t=" + sci(t) + " x=" + sci(x);
        }
      }
      for (double y : logspace(0.1, 10.0, 9)) {
        auto f = [&](double s) {
          try {
            return u_value(ps, t, std::exp(s)) - std::exp(s) * y;
          } catch (const RangeError&) {
            return -kInf;
          }
        };
        const auto sup = oracle::golden_max(f, -30.0, 8.0);
        const double e = rel_err(sup.second, hatV(ds, t, y));
        dual_err = std::max(dual_err, e);
      }
    }
  }
  Outcome o;
  o.passed = primal_err <= 1e-5 && dual_err <= 1e-5;
  o.detail = "max rel |inf_y(V+xy) - u| " + sci(primal_err) + " (" + worst + "), max rel |sup_x(u-xy) - V| " +
             sci(dual_err) + " for power and kinked, t in {0,0.5}, x,y in [0.1,10] (tol 1e-5)";
  return o;
}

struct McScenario {
  std::string name;
  UtilityFunction utility;
};

std::vector<McScenario> mc_scenarios() {
  return {{"merton", UtilityFunction::power(0.5)}, {"kinked", scenario::kinked_utility()}};
}

std::map<std::string, Estimate> g_verified;  // criterion 6 estimates reused by criterion 8

std::string check_summary(const ControlCheck& c, double reference) {
  return c.name + " " + sci(c.estimate.mean) + "+-" + sci(c.estimate.std_error) + " (z " +
         sci((c.estimate.mean - reference) / c.estimate.std_error) + ")";
}

// Criterion 6.
Outcome monte_carlo_verification() {
  Stopwatch sw;
  Outcome o;
  o.passed = true;
  for (const auto& sc : mc_scenarios()) {
    const auto ps = scenario::primal_surface(sc.utility);
    const auto rep = verify_value(ps, ps.market().params(), acceptance_sim(), 1.0);
    bool ok = std::abs(rep.optimal.z_score) <= 3.0;
    std::string basket;
    for (const auto& c : rep.basket) {
      ok = ok && c.estimate.mean <= rep.u0 + 3.0 * c.estimate.std_error;
      basket += "; " + check_summary(c, rep.u0);
    }
    g_verified[sc.name] = rep.optimal.estimate;
    o.passed = o.passed && ok;
    o.detail += sc.name + ": u0 " + sci(rep.u0) + ", " + check_summary(rep.optimal, rep.u0) + basket + ". ";
  }
  const double secs = sw.seconds();
  o.passed = o.passed && secs < 60.0;
  o.detail += "1e5 paths, 250 steps; " + sci(secs) + " s (limit 60 s)";
  return o;
}

// Criterion 7.
Outcome duality_pairing() {
  Outcome o;
  o.passed = true;
  for (const auto& sc : mc_scenarios()) {
    const auto ps = scenario::primal_surface(sc.utility);
    const auto rep = duality_pairing_check(ps, ps.market(), ps.market().params(), acceptance_sim(), 1.0);
    bool ok = std::abs(rep.optimal.z_score) <= 3.0;
    std::string basket;
    for (const auto& c : rep.basket) {
      ok = ok && c.estimate.mean <= rep.target + 3.0 * c.estimate.std_error;
      basket += "; " + check_summary(c, rep.target);
    }
    o.passed = o.passed && ok;
    o.detail += sc.name + ": x0 y* " + sci(rep.target) + ", " + check_summary(rep.optimal, rep.target) +
                basket + ". ";
  }
  return o;
}

// Criterion 8.
Outcome cvar_machinery() {
  Outcome o;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 1.0);
  double ru_gap = 0.0;
  for (int kind = 0; kind < 3; ++kind) {
    std::vector<double> z(100000);
    for (auto& v : z) {
      const double g = nd(rng);
      v = kind == 0 ? g : kind == 1 ? std::exp(g) : std::round(4.0 * g);
    }
    for (double beta : {0.9, 0.95, 0.99}) {
      const auto a = cvar_var_of_sample(z, beta);
      const auto b = cvar_var_order_statistic(z, beta);
      ru_gap = std::max(ru_gap, std::abs(a.cvar - b.cvar) / std::max(1.0, std::abs(b.cvar)));
    }
  }
  bool ok = ru_gap <= 1e-10;
  o.detail = "RU vs order statistics max gap " + sci(ru_gap) + " (tol 1e-10). ";

  const std::vector<double> lambdas{0.0, 0.05, 0.1, 0.2, 0.5};
  for (const auto& sc : mc_scenarios()) {
    const PipelineContext ctx{scenario::merton_market(), QuadratureConfig{}};
    const auto pts = frontier_sweep(sc.utility, CvarSpec{0.95, 0.0, 1.0}, lambdas, ctx, acceptance_sim());
    const double u0 = scenario::primal_surface(sc.utility).value(0.0, 1.0);
    const auto& e0 = pts.front().utility;
    const bool endpoint = std::abs(e0.mean - u0) <= 3.0 * e0.std_error;
    const auto it = g_verified.find(sc.name);
    const bool matches_c6 =
        it == g_verified.end() || std::abs(e0.mean - it->second.mean) <= 3.0 * e0.std_error;
    bool monotone = true;
    std::string cv;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cv += (i ? ", " : "") + sci(pts[i].cvar);
      if (i > 0 && pts[i].cvar > pts[i - 1].cvar + 3.0 * std::hypot(pts[i].cvar_se, pts[i - 1].cvar_se)) {
        monotone = false;
      }
    }
    ok = ok && endpoint && matches_c6 && monotone;
    o.detail += sc.name + ": lambda=0 utility " + sci(e0.mean) + "+-" + sci(e0.std_error) + " vs u0 " +
                sci(u0) + (endpoint && matches_c6 ? " ok" : " MISMATCH") + ", CVaR over lambda {" + cv +
                "}" + (monotone ? " nonincreasing" : " NOT nonincreasing") + ". ";
  }
  o.passed = ok;
  return o;
}

// Criterion 9.
Outcome risk_aversion_preservation() {
  const std::vector<double> ts{0.0, 0.25, 0.5, 0.75, 0.99};
  const auto xs = logspace(0.1, 10.0, 25);
  const auto ys = logspace(0.1, 10.0, 25);
  double r_err = 0.0;
  bool decreasing = true;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t total = 0;
  bool lemma_shape = true;
  for (double p : {0.3, 0.5, 0.7}) {
    const auto ps = scenario::primal_surface(UtilityFunction::power(p));
    for (double t : ts) {
      std::vector<double> r;
      InverseHint hint;
      for (double x : xs) {
        r.push_back(dynamic_risk_aversion(ps, t, x, &hint));
        r_err = std::max(r_err, rel_err(r.back(), (1.0 - p) / x));
      }
      decreasing = decreasing && classify_monotone(r) == Monotonicity::Decreasing;
      std::vector<double> w;
      for (double y : ys) w.push_back(w_surface(ps.dual(), t, y).direct);
      for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
        const double s0 = (w[i] - w[i - 1]) / (ys[i] - ys[i - 1]);
        const double s1 = (w[i + 1] - w[i]) / (ys[i + 1] - ys[i]);
        const double second = 2.0 * (s1 - s0) / (ys[i + 1] - ys[i - 1]);
        ++total;
        if (second > 0.0) ++positive;
        if (second < 0.0) ++negative;
      }
    }
    // y U~'(y) - U~(y) = -c (r + 1) y^{-r}: concave for every power primal.
    const DualUtility dual = conjugate(UtilityFunction::power(p));
    std::vector<double> h;
    for (double y : ys) h.push_back(y * dual.derivative(y) - dual(y));
    lemma_shape = lemma_shape && classify_curvature(ys, h) == Curvature::Concave;
  }
  const bool r_part = r_err <= 1e-6 && decreasing;
  const bool sign_part = positive == total;
  Outcome o;
  o.passed = r_part && sign_part;
  o.anticipated_failure = r_part && !sign_part && negative == total && lemma_shape;
  o.detail = "R(t,x) vs (1-p)/x max rel err " + sci(r_err) + " (tol 1e-6), strictly decreasing at every t: " +
             (decreasing ? "yes" : "no") + "; second differences of w in y > 0 at " + std::to_string(positive) +
             "/" + std::to_string(total) + " points";
  if (o.anticipated_failure) {
    o.detail += ". The stated sign cannot hold: for U = x^p the conjugate is c y^{-r}, so y U~' - U~ = "
                "-c (r+1) y^{-r} is concave, not convex, and w(t,y) = -c (r+1) e^{r(r+1) tau} y^{-r} "
                "is strictly concave. Observed: w concave at all " + std::to_string(negative) +
                " points, matching the curvature of y U~' - U~ as the shape-inheritance rule predicts";
  }
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DUALHJB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() == "timings.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

// Criterion 10.
Outcome reproducibility() {
  const fs::path root = fs::current_path() / "acceptance_selftest";
  fs::remove_all(root);
  const std::string seed = " --seed 20240917";
  const int a = run_cli("selftest" + seed + " --out " + (root / "a").string());
  const int b = run_cli("selftest" + seed + " --out " + (root / "b").string());
  const int c = run_cli("selftest" + seed + " --workers 4 --out " + (root / "c").string());
  Outcome o;
  if (a != 0 || b != 0 || c != 0) {
    o.detail = "selftest exit codes " + std::to_string(a) + ", " + std::to_string(b) + ", " + std::to_string(c);
    return o;
  }
  const auto fa = read_outputs(root / "a");
  const auto fb = read_outputs(root / "b");
  const auto fc = read_outputs(root / "c");
  o.passed = !fa.empty() && fa == fb && fa == fc;
  std::string names;
  for (const auto& [k, v] : fa) names += (names.empty() ? "" : ", ") + k;
  o.detail = "selftest x2 (same seed) and with --workers 4: " + names +
             (o.passed ? " byte-identical" : " DIFFER") + " (timings.json excluded)";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Merton oracle", merton_oracle},
      {2, "dual quadrature oracle", dual_quadrature_oracle},
      {3, "nonsmooth smoothing", nonsmooth_smoothing},
      {4, "cone QP certification", cone_qp_certification},
      {5, "conjugacy round trips", conjugacy_round_trips},
      {6, "Monte Carlo verification", monte_carlo_verification},
      {7, "duality pairing", duality_pairing},
      {8, "CVaR machinery", cvar_machinery},
      {9, "risk-aversion preservation", risk_aversion_preservation},
      {10, "reproducibility", reproducibility},
  };

  int unexpected = 0;
  int anticipated = 0;
  for (const auto& c : criteria) {
    Stopwatch sw;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::string tag = o.passed ? "PASS" : "FAIL";
    if (!o.passed && o.anticipated_failure) {
      tag = "FAIL (anticipated)";
      ++anticipated;
    } else if (!o.passed) {
      ++unexpected;
    }
    std::cout << tag << "  criterion " << c.id << " " << c.title << " [" << sci(sw.seconds()) << " s]: "
              << o.detail << std::endl;
  }
  std::cout << "\n" << criteria.size() - static_cast<std::size_t>(unexpected + anticipated) << "/"
            << criteria.size() << " criteria passed";
  if (anticipated > 0) std::cout << ", " << anticipated << " anticipated failure(s)";
  if (unexpected > 0) std::cout << ", " << unexpected << " unexpected failure(s)";
  std::cout << std::endl;
  return unexpected == 0 ? 0 : 1;
}
