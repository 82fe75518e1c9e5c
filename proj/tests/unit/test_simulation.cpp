#include <cmath>

#include <gtest/gtest.h>

#include <dualhjb/errors.hpp>
#include <dualhjb/simulation.hpp>

#include "oracles.hpp"
#include "scenarios.hpp"

using namespace dualhjb;

namespace {

SimConfig small_cfg(std::size_t paths = 20000) {
  SimConfig cfg;
  cfg.paths = paths;
  cfg.steps_per_year = 50;
  return cfg;
}

Eigen::VectorXd scalar(double v) {
  Eigen::VectorXd out(1);
  out(0) = v;
  return out;
}

}  // namespace

TEST(Simulation, ZeroControlKeepsWealth) {
  const auto em = scenario::merton_market();
  const auto batch = simulate_wealth(em, ConstantControl(scalar(0.0)), 1.7, small_cfg(1000));
  ASSERT_EQ(batch.terminal_wealth.size(), 1000u);
  for (double x : batch.terminal_wealth) EXPECT_EQ(x, 1.7);
}

TEST(Simulation, MertonLognormalMoment) {
  const auto em = scenario::merton_market();
  auto cfg = small_cfg(100000);
  const auto batch = simulate_wealth(em, ConstantControl(scalar(2.5)), 1.0, cfg);
  for (double x : batch.terminal_wealth) ASSERT_GT(x, 0.0);
  const auto est = batch.estimate([](double x) { return std::sqrt(x); });
  EXPECT_LE(std::abs(est.mean - std::exp(0.125)), 3.0 * est.std_error);
}

TEST(Simulation, Deterministic) {
  const auto em = scenario::merton_market();
  const auto a = simulate_wealth(em, ConstantControl(scalar(1.0)), 1.0, small_cfg());
  const auto b = simulate_wealth(em, ConstantControl(scalar(1.0)), 1.0, small_cfg());
  EXPECT_EQ(a.terminal_wealth, b.terminal_wealth);
  EXPECT_EQ(a.mean, b.mean);
}

TEST(Simulation, WorkerCountInvariant) {
  const auto em = scenario::merton_market();
  auto cfg = small_cfg();
  const auto a = simulate_wealth(em, ConstantControl(scalar(1.0)), 1.0, cfg);
  cfg.workers = 3;
  const auto b = simulate_wealth(em, ConstantControl(scalar(1.0)), 1.0, cfg);
  EXPECT_EQ(a.terminal_wealth, b.terminal_wealth);
}

TEST(Simulation, ConeViolationThrows) {
  const EffectiveMarket em(MarketParams::scalar(0.2, 0.4, 1.0, ConeSpec::nonneg_orthant(1)));
  const FunctionControl shortsell([](double, double, Eigen::VectorXd& out) { out = scalar(-0.5); },
                                  "short");
  EXPECT_THROW(simulate_wealth(em, shortsell, 1.0, small_cfg(100)), SimulationError);
}

TEST(Simulation, ConfigValidation) {
  SimConfig cfg;
  cfg.paths = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SimConfig{};
  cfg.scheme = "euler";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Simulation, TimeGridHasBreakpoints) {
  Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  const MarketParams mp({0.0, 0.37, 1.0}, {scalar(0.5), scalar(1.0)}, {one, one},
                        ConeSpec::whole_space(1), 1e-3);
  const auto g = simulation_time_grid(mp, 10, 4.0);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_NE(std::find(g.begin(), g.end(), 0.37), g.end());
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}

TEST(DualSimulation, Moments) {
  const auto em = scenario::merton_market();
  const auto batch = simulate_dual(em, 0.8, small_cfg(100000));
  const auto m1 = estimate_mean(batch.terminal_dual, batch.antithetic);
  EXPECT_LE(std::abs(m1.mean - 0.8), 3.0 * m1.std_error);
  std::vector<double> inv;
  for (double y : batch.terminal_dual) inv.push_back(1.0 / y);
  const auto m2 = estimate_mean(inv, batch.antithetic);
  EXPECT_LE(std::abs(m2.mean - std::exp(0.25) / 0.8), 3.0 * m2.std_error);

  const auto ds = scenario::dual_surface(scenario::kinked_utility());
  std::vector<double> vals;
  for (double y : batch.terminal_dual) vals.push_back(ds.dual_utility()(y));
  const auto m3 = estimate_mean(vals, batch.antithetic);
  EXPECT_LE(std::abs(m3.mean - hatV(ds, 0.0, 0.8)), 3.0 * m3.std_error);
}

TEST(Novikov, ZeroAndConstantControls) {
  const auto em = scenario::merton_market();
  const auto zero = simulate_wealth(em, ConstantControl(scalar(0.0)), 1.0, small_cfg(1000));
  const auto nz = novikov_diagnostic(zero);
  EXPECT_EQ(nz.mean, 1.0);
  EXPECT_EQ(nz.max, 1.0);

  const auto merton = simulate_wealth(em, ConstantControl(scalar(2.5)), 1.0, small_cfg(1000));
  const auto nm = novikov_diagnostic(merton);
  const double ref = std::exp(0.5 * 1.0 * 1.0);  // |pi sigma| = 1, T = 1
  EXPECT_NEAR(nm.mean, ref, 1e-12 * ref);
  EXPECT_NEAR(nm.max, ref, 1e-12 * ref);
  EXPECT_FALSE(nm.divergence_suspected);
}

TEST(Novikov, BoundedControlBound) {
  const auto em = scenario::merton_market();
  // |pi sigma| <= 0.8 for |pi| <= 2.
  const FunctionControl bounded(
      [](double, double x, Eigen::VectorXd& out) { out = scalar(2.0 * std::sin(x)); }, "bounded");
  const auto batch = simulate_wealth(em, bounded, 1.0, small_cfg(2000));
  EXPECT_LE(novikov_diagnostic(batch).max, std::exp(0.5 * 0.64) * (1.0 + 1e-12));
}

TEST(Verification, MertonSmall) {
  const auto ps = scenario::primal_surface(UtilityFunction::power(0.5));
  auto cfg = small_cfg(20000);
  const auto rep = verify_value(ps, ps.market().params(), cfg, 1.0);
  EXPECT_TRUE(rep.passed());
  EXPECT_LE(std::abs(rep.optimal.z_score), 3.0);
  for (const auto& c : rep.basket) EXPECT_LE(c.estimate.mean, rep.u0 + 3.0 * c.estimate.std_error);
}

TEST(Pairing, ZeroControlIsMartingale) {
  const auto ps = scenario::primal_surface(UtilityFunction::power(0.5));
  const auto rep = duality_pairing_check(ps, ps.market(), ps.market().params(), small_cfg(20000), 1.0);
  EXPECT_TRUE(rep.passed());
  bool found_zero = false;
  for (const auto& c : rep.basket) {
    if (c.name == "zero") {
      found_zero = true;
      EXPECT_LE(std::abs(c.estimate.mean - rep.target), 3.0 * c.estimate.std_error);
    }
  }
  EXPECT_TRUE(found_zero);
}
