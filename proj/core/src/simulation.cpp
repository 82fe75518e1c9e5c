#include "dualhjb/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "dualhjb/errors.hpp"
#include "dualhjb/grid.hpp"

namespace dualhjb {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream for one path (or one antithetic pair), independent of scheduling.
std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t unit) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(unit + 0x632be59bd9b4e019ULL)));
}

struct StepData {
  double t = 0.0;
  double dt = 0.0;
  double sqrt_dt = 0.0;
  std::size_t k = 0;
};

std::vector<StepData> make_steps(const std::vector<double>& grid, const MarketParams& mp) {
  std::vector<StepData> steps;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    StepData s;
    s.t = grid[i];
    s.dt = grid[i + 1] - grid[i];
    s.sqrt_dt = std::sqrt(s.dt);
    s.k = mp.interval(s.t);
    steps.push_back(s);
  }
  return steps;
}

// Runs `body(unit)` for unit in [0, units) split into contiguous chunks.
template <class Body>
void parallel_units(std::size_t units, unsigned workers, Body body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(units, 1))));
  if (workers == 1) {
    for (std::size_t u = 0; u < units; ++u) body(u);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (units + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(units, lo + chunk);
        for (std::size_t u = lo; u < hi; ++u) body(u);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

PathBatchResult run_paths(const EffectiveMarket& em, const FeedbackControl* control, double x0,
                          double y0, bool with_dual, const SimConfig& cfg) {
  cfg.validate();
  if (control != nullptr && !(x0 > 0.0)) throw DomainError("simulation requires x0 > 0");
  if (with_dual && !(y0 > 0.0)) throw DomainError("simulation requires y0 > 0");
  const auto& mp = em.params();
  const int n = mp.dim();
  const auto grid = simulation_time_grid(mp, cfg.steps_per_year, cfg.time_grading);
  const auto steps = make_steps(grid, mp);

  PathBatchResult out;
  out.antithetic = cfg.antithetic;
  if (control != nullptr) {
    out.terminal_wealth.assign(cfg.paths, 0.0);
    out.control_norms.assign(cfg.paths, 0.0);
  }
  if (with_dual) out.terminal_dual.assign(cfg.paths, 0.0);

  const std::size_t width = cfg.antithetic ? 2 : 1;
  const std::size_t units = cfg.paths / width;
  const double lx0 = control != nullptr ? std::log(x0) : 0.0;
  const double ly0 = with_dual ? std::log(y0) : 0.0;
  const ConeSpec& cone = mp.cone();

  parallel_units(units, cfg.workers, [&](std::size_t unit) {
    auto gen = stream_for(cfg.seed, unit);
    std::normal_distribution<double> normal;
    Eigen::VectorXd xi(n), pi(n), vol(n);
    double lx[2] = {lx0, lx0};
    double ly[2] = {ly0, ly0};
    double norms[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      for (int j = 0; j < n; ++j) xi(j) = normal(gen);
      const auto& sigma = mp.sigma(s.k);
      const auto& b = mp.b(s.k);
      for (std::size_t a = 0; a < width; ++a) {
        const double sign = a == 0 ? 1.0 : -1.0;
        if (control != nullptr) {
          control->evaluate(i, s.t, lx[a], pi);
          if (!cone.contains(pi, 1e-9 * std::max(1.0, pi.norm()))) {
            std::ostringstream os;
            os << "control '" << control->name() << "' left the cone at step " << i << " (t=" << s.t
               << ")";
            throw SimulationError(os.str());
          }
          vol.noalias() = sigma.transpose() * pi;
          const double v2 = vol.squaredNorm();
          lx[a] += (pi.dot(b) - 0.5 * v2) * s.dt + sign * s.sqrt_dt * vol.dot(xi);
          norms[a] += v2 * s.dt;
        }
        if (with_dual) {
          const auto& th = em.theta_hat(s.k);
          ly[a] += -0.5 * th.squaredNorm() * s.dt - sign * s.sqrt_dt * th.dot(xi);
        }
      }
    }
    for (std::size_t a = 0; a < width; ++a) {
      const std::size_t path = unit * width + a;
      if (control != nullptr) {
        out.terminal_wealth[path] = std::exp(lx[a]);
        out.control_norms[path] = norms[a];
      }
      if (with_dual) out.terminal_dual[path] = std::exp(ly[a]);
    }
  });

  if (control != nullptr) {
    const auto e = estimate_mean(out.terminal_wealth, cfg.antithetic);
    out.mean = e.mean;
    out.std_error = e.std_error;
  } else if (with_dual) {
    const auto e = estimate_mean(out.terminal_dual, cfg.antithetic);
    out.mean = e.mean;
    out.std_error = e.std_error;
  }
  return out;
}

ControlCheck check_against(const std::string& name, const Estimate& e, double reference,
                           bool two_sided) {
  ControlCheck c;
  c.name = name;
  c.estimate = e;
  const double diff = e.mean - reference;
  if (e.std_error > 0.0) {
    c.z_score = diff / e.std_error;
  } else {
    c.z_score = diff == 0.0 ? 0.0 : (diff > 0.0 ? kInf : -kInf);
  }
  // Zero-variance estimators are compared with a rounding allowance.
  const double slack = 3.0 * e.std_error + 1e-12 * std::max(1.0, std::abs(reference));
  c.passed = two_sided ? std::abs(diff) <= slack : diff <= slack;
  return c;
}

std::string describe_check(const ControlCheck& c, double reference) {
  std::ostringstream os;
  os << c.name << ": mean=" << c.estimate.mean << " se=" << c.estimate.std_error
     << " reference=" << reference << " z=" << c.z_score;
  return os.str();
}

}  // namespace

void SimConfig::validate() const {
  if (paths == 0) throw ConfigError("simulation.paths must be positive");
  if (steps_per_year == 0) throw ConfigError("simulation.steps_per_year must be positive");
  if (antithetic && paths % 2 != 0) throw ConfigError("simulation.paths must be even with antithetic");
  if (scheme != "log-euler") throw ConfigError("simulation.scheme must be \"log-euler\"");
  if (workers == 0) throw ConfigError("simulation.workers must be positive");
  if (!(time_grading >= 1.0)) throw ConfigError("simulation.time_grading must be >= 1");
}

std::vector<double> simulation_time_grid(const MarketParams& mp, std::size_t steps_per_year,
                                         double grading) {
  if (!(grading >= 1.0)) throw ConfigError("simulation.time_grading must be >= 1");
  const double T = mp.horizon();
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T * static_cast<double>(steps_per_year))));
  std::vector<double> g = linspace(0.0, 1.0, n + 1);
  for (auto& v : g) v = T * (1.0 - std::pow(1.0 - v, grading));
  g.back() = T;
  for (double b : mp.grid()) g.push_back(b);
  std::sort(g.begin(), g.end());
  std::vector<double> out;
  for (double v : g) {
    if (out.empty() || v > out.back() + 1e-12 * T) {
      out.push_back(v);
    } else if (v == T) {
      out.back() = T;
    }
  }
  return out;
}

Estimate estimate_mean(const std::vector<double>& samples, bool antithetic) {
  if (samples.empty()) throw DomainError("estimate_mean on an empty sample");
  std::vector<double> units;
  if (antithetic) {
    if (samples.size() % 2 != 0) throw DomainError("antithetic sample size must be even");
    units.resize(samples.size() / 2);
    for (std::size_t j = 0; j < units.size(); ++j) units[j] = 0.5 * (samples[2 * j] + samples[2 * j + 1]);
  } else {
    units = samples;
  }
  CompensatedSum sum;
  for (double v : units) sum.add(v);
  const double m = static_cast<double>(units.size());
  Estimate e;
  e.mean = sum.value() / m;
  if (units.size() > 1) {
    CompensatedSum sq;
    for (double v : units) sq.add((v - e.mean) * (v - e.mean));
    e.std_error = std::sqrt(sq.value() / (m - 1.0) / m);
  }
  return e;
}

Estimate PathBatchResult::estimate(const std::function<double(double)>& f) const {
  std::vector<double> v(terminal_wealth.size());
  std::transform(terminal_wealth.begin(), terminal_wealth.end(), v.begin(), f);
  return estimate_mean(v, antithetic);
}

ConstantControl::ConstantControl(Eigen::VectorXd pi, std::string name)
    : pi_(std::move(pi)), name_(std::move(name)) {}

ScaledControl::ScaledControl(std::shared_ptr<const FeedbackControl> base, double factor,
                             std::string name)
    : base_(std::move(base)), factor_(factor), name_(std::move(name)) {
  if (!base_) throw DomainError("ScaledControl needs a base control");
}

void ScaledControl::evaluate(std::size_t step, double t, double log_x, Eigen::VectorXd& out) const {
  base_->evaluate(step, t, log_x, out);
  out *= factor_;
}

FunctionControl::FunctionControl(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

void FunctionControl::evaluate(std::size_t, double t, double log_x, Eigen::VectorXd& out) const {
  fn_(t, std::exp(log_x), out);
}

OptimalControlTable::OptimalControlTable(const PrimalSurface& ps, const std::vector<double>& time_grid,
                                         double x0, ControlTableConfig cfg) {
  if (!(x0 > 0.0)) throw DomainError("control table requires x0 > 0");
  if (cfg.nodes < 3) throw ConfigError("control table needs at least 3 nodes");
  QuadratureConfig q = ps.dual().quadrature();
  q.nodes = cfg.quadrature_nodes;
  const DualSurface dual = ps.dual().with_quadrature(q);
  const auto& em = ps.market();
  const double w = cfg.log_half_width;
  const double max_gap = 2.0 * (2.0 * w) / static_cast<double>(cfg.nodes - 1);

  InverseHint lo_hint;
  InverseHint hi_hint;
  for (std::size_t i = 0; i + 1 < time_grid.size(); ++i) {
    const double t = time_grid[i];
    const double tau = dual.tau(t);
    const double ly_lo = std::log(dual.inverse(t, x0 * std::exp(w), 1e-10, &lo_hint));
    const double ly_hi = std::log(dual.inverse(t, x0 * std::exp(-w), 1e-10, &hi_hint));

    struct Node {
      double ly, lx, rho;
    };
    auto node_at = [&](double ly) {
      const double y = std::exp(ly);
      const auto d = dual.derivs_at_tau(tau, y);
      const double x = -d.v_y;
      return Node{ly, std::log(x), y * d.v_yy / x};
    };
    std::vector<Node> nodes;
    const double h = (ly_hi - ly_lo) / static_cast<double>(cfg.nodes - 1);
    for (std::size_t j = 0; j < cfg.nodes; ++j) {
      const double ly = j + 1 == cfg.nodes ? ly_hi : ly_lo + h * static_cast<double>(j);
      const Node nd = node_at(ly);
      // Fill gaps where x moves fast in y.
      if (!nodes.empty()) {
        std::vector<Node> stack{nd};
        int budget = 64;
        while (!stack.empty()) {
          const Node& prev = nodes.back();
          const Node next = stack.back();
          if (std::abs(prev.lx - next.lx) > max_gap && budget-- > 0) {
            stack.push_back(node_at(0.5 * (prev.ly + next.ly)));
          } else {
            nodes.push_back(next);
            stack.pop_back();
          }
        }
      } else {
        nodes.push_back(nd);
      }
    }
    // y ascending means x descending.
    Row row;
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
      if (!row.log_x.empty() && !(it->lx > row.log_x.back())) continue;
      if (!std::isfinite(it->lx) || !std::isfinite(it->rho)) continue;
      row.log_x.push_back(it->lx);
      row.rho.push_back(it->rho);
    }
    if (row.log_x.empty()) throw SolverError("control table row is empty at t=" + std::to_string(t));
    rows_.push_back(std::move(row));
    direction_.push_back(em.merton_direction(em.interval(t)));
  }
}

double OptimalControlTable::rho(std::size_t step, double log_x) const {
  const auto& row = rows_.at(step);
  const auto& lx = row.log_x;
  if (!(log_x > lx.front())) return row.rho.front();
  if (log_x >= lx.back()) return row.rho.back();
  const auto it = std::upper_bound(lx.begin(), lx.end(), log_x);
  const auto j = static_cast<std::size_t>(it - lx.begin()) - 1;
  const double f = (log_x - lx[j]) / (lx[j + 1] - lx[j]);
  return row.rho[j] + f * (row.rho[j + 1] - row.rho[j]);
}

void OptimalControlTable::evaluate(std::size_t step, double, double log_x, Eigen::VectorXd& out) const {
  out = rho(step, log_x) * direction_[step];
}

PathBatchResult simulate_wealth(const EffectiveMarket& em, const FeedbackControl& control,
                                double x0, const SimConfig& cfg) {
  return run_paths(em, &control, x0, 0.0, false, cfg);
}

PathBatchResult simulate_joint(const EffectiveMarket& em, const FeedbackControl& control,
                               double x0, double y0, const SimConfig& cfg) {
  return run_paths(em, &control, x0, y0, true, cfg);
}

PathBatchResult simulate_dual(const EffectiveMarket& em, double y0, const SimConfig& cfg) {
  if (!(y0 > 0.0)) throw DomainError("simulate_dual requires y0 > 0");
  // The dual is lognormal with log-variance 2 tau(0); one draw per path is exact.
  SimConfig c = cfg;
  c.validate();
  PathBatchResult out;
  out.antithetic = c.antithetic;
  out.terminal_dual.assign(c.paths, 0.0);
  const double tau0 = em.tau_at(0.0);
  const double sd = std::sqrt(2.0 * tau0);
  const std::size_t width = c.antithetic ? 2 : 1;
  parallel_units(c.paths / width, c.workers, [&](std::size_t unit) {
    auto gen = stream_for(c.seed, unit);
    std::normal_distribution<double> normal;
    const double z = normal(gen);
    for (std::size_t a = 0; a < width; ++a) {
      const double sign = a == 0 ? 1.0 : -1.0;
      out.terminal_dual[unit * width + a] = y0 * std::exp(-tau0 - sign * sd * z);
    }
  });
  const auto e = estimate_mean(out.terminal_dual, c.antithetic);
  out.mean = e.mean;
  out.std_error = e.std_error;
  return out;
}

VerificationReport verify_value(const PrimalSurface& ps, const MarketParams& mp,
                                const SimConfig& cfg, double x0) {
  VerificationReport rep;
  const auto& em = ps.market();
  const auto& u = ps.utility();
  rep.u0 = ps.value(0.0, x0);
  const auto grid = simulation_time_grid(mp, cfg.steps_per_year, cfg.time_grading);
  auto optimal = std::make_shared<OptimalControlTable>(ps, grid, x0);
  auto utility_of = [&](double x) { return u(x); };

  const auto opt_batch = simulate_wealth(em, *optimal, x0, cfg);
  rep.optimal = check_against("optimal", opt_batch.estimate(utility_of), rep.u0, true);
  rep.diagnostics.add("optimal_matches_value", rep.optimal.passed, describe_check(rep.optimal, rep.u0));

  const ConstantControl zero(Eigen::VectorXd::Zero(mp.dim()), "zero");
  const ScaledControl half(optimal, 0.5, "half_optimal");
  const ScaledControl twice(optimal, 2.0, "double_optimal");
  for (const FeedbackControl* c : std::initializer_list<const FeedbackControl*>{&zero, &half, &twice}) {
    const auto batch = simulate_wealth(em, *c, x0, cfg);
    auto check = check_against(c->name(), batch.estimate(utility_of), rep.u0, false);
    rep.diagnostics.add("suboptimal_" + c->name(), check.passed, describe_check(check, rep.u0));
    rep.basket.push_back(std::move(check));
  }
  return rep;
}

PairingReport duality_pairing_check(const PrimalSurface& ps, const EffectiveMarket& em,
                                    const MarketParams& mp, const SimConfig& cfg, double x0) {
  PairingReport rep;
  rep.y_star = ps.derivs(0.0, x0).y;
  rep.target = x0 * rep.y_star;
  const auto grid = simulation_time_grid(mp, cfg.steps_per_year, cfg.time_grading);
  auto optimal = std::make_shared<OptimalControlTable>(ps, grid, x0);

  auto pairing = [&](const FeedbackControl& c) {
    const auto batch = simulate_joint(em, c, x0, rep.y_star, cfg);
    std::vector<double> prod(batch.terminal_wealth.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = batch.terminal_wealth[i] * batch.terminal_dual[i];
    return estimate_mean(prod, cfg.antithetic);
  };

  rep.optimal = check_against("optimal", pairing(*optimal), rep.target, true);
  rep.diagnostics.add("pairing_optimal", rep.optimal.passed, describe_check(rep.optimal, rep.target));
  const ConstantControl zero(Eigen::VectorXd::Zero(mp.dim()), "zero");
  const ScaledControl twice(optimal, 2.0, "double_optimal");
  for (const FeedbackControl* c : std::initializer_list<const FeedbackControl*>{&zero, &twice}) {
    auto check = check_against(c->name(), pairing(*c), rep.target, false);
    rep.diagnostics.add("pairing_" + c->name(), check.passed, describe_check(check, rep.target));
    rep.basket.push_back(std::move(check));
  }
  return rep;
}

NovikovReport novikov_diagnostic(const PathBatchResult& batch) {
  NovikovReport rep;
  const auto& q = batch.control_norms;
  if (q.empty()) throw DomainError("novikov_diagnostic needs recorded control norms");
  std::vector<double> stat(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    double e = 0.5 * q[i];
    if (e > 700.0) {
      e = 700.0;
      rep.overflow_clamped = true;
    }
    stat[i] = std::exp(e);
  }
  CompensatedSum sum;
  std::size_t next = 0;
  const std::size_t marks[3] = {std::max<std::size_t>(1, q.size() / 16),
                                std::max<std::size_t>(1, q.size() / 4), q.size()};
  for (std::size_t i = 0; i < stat.size(); ++i) {
    sum.add(stat[i]);
    rep.max = std::max(rep.max, stat[i]);
    while (next < 3 && i + 1 == marks[next]) {
      rep.prefix_means.push_back(sum.value() / static_cast<double>(i + 1));
      ++next;
    }
  }
  rep.mean = sum.value() / static_cast<double>(stat.size());
  rep.max_over_mean = rep.max / rep.mean;
  // Heavy tails show up as a few paths dominating or the mean drifting up with N.
  const bool drifting = rep.prefix_means.size() == 3 && rep.prefix_means[2] > 2.0 * rep.prefix_means[0];
  rep.divergence_suspected = rep.overflow_clamped || drifting ||
                             rep.max_over_mean > 0.01 * static_cast<double>(stat.size());
  return rep;
}

}  // namespace dualhjb
