#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <dualhjb/errors.hpp>
#include <dualhjb/grid.hpp>
#include <dualhjb/primal_value.hpp>

#include "oracles.hpp"
#include "scenarios.hpp"

using namespace dualhjb;

TEST(PrimalValue, MertonClosedForm) {
  const auto ps = scenario::primal_surface(UtilityFunction::power(0.5));
  for (double t : {0.0, 0.4, 0.9}) {
    for (double x : logspace(0.1, 10.0, 9)) {
      const double ref = scenario::merton_value(0.5, t, x);
      EXPECT_NEAR(u_value(ps, t, x), ref, 1e-9 * ref);
      const auto d = u_derivs(ps, t, x);
      const double ux = 0.5 * ref / x;
      EXPECT_NEAR(d.u_x, ux, 1e-8 * ux);
      EXPECT_NEAR(d.u_xx, -0.5 * ux / x, 1e-8 * ux / x);
      EXPECT_NEAR(optimal_control(ps, t, x).pi(0), 2.5, 1e-8);
    }
  }
}

TEST(PrimalValue, BoundaryAndTerminal) {
  const auto ps = scenario::primal_surface(scenario::kinked_utility());
  EXPECT_DOUBLE_EQ(u_value(ps, 1.0, 9.0), 3.0);
  for (double t : {0.0, 0.5, 1.0}) EXPECT_EQ(u_value(ps, t, 0.0), 0.0);
  EXPECT_THROW(u_value(ps, 0.0, -1.0), DomainError);
  EXPECT_THROW(u_derivs(ps, 1.0, 1.0), DomainError);
}

TEST(PrimalValue, StrictConcavityAtRandomPoints) {
  const auto ps = scenario::primal_surface(scenario::kinked_utility());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tt(0.0, 0.99);
  std::uniform_real_distribution<double> lx(std::log(0.05), std::log(20.0));
  for (int i = 0; i < 100; ++i) {
    const double t = tt(rng);
    const double x = std::exp(lx(rng));
    const auto d = u_derivs(ps, t, x);
    EXPECT_GT(d.u_x, 0.0);
    EXPECT_LT(d.u_xx, 0.0) << t << " " << x;
  }
}

TEST(PrimalValue, MarginalIdentities) {
  const auto ps = scenario::primal_surface(scenario::kinked_utility());
  const auto& ds = ps.dual();
  for (double t : {0.0, 0.5, 0.9}) {
    for (double x : {0.3, 1.0, 2.5}) {
      const auto d = u_derivs(ps, t, x);
      EXPECT_NEAR(d.u_x, d.y, 1e-14 * d.y);
      EXPECT_NEAR(d.u_xx * hatV_derivs(ds, t, d.y).v_yy, -1.0, 1e-8);
      const double h = 1e-4 * x;
      const double fd = (u_value(ps, t, x + h) - u_value(ps, t, x - h)) / (2 * h);
      EXPECT_NEAR(d.u_x, fd, 1e-5 * d.u_x);
    }
  }
}

TEST(PrimalValue, ControlInOrthant) {
  Eigen::Vector2d b(0.08, -0.03);
  Eigen::Matrix2d s;
  s << 0.3, 0.0, 0.1, 0.25;
  const EffectiveMarket em(MarketParams::constant(b, s, 1.0, ConeSpec::nonneg_orthant(2), 1e-3));
  const PrimalSurface ps(DualSurface(conjugate(UtilityFunction::power(0.5)), em));
  for (double x : {0.5, 1.0, 4.0}) {
    const auto c = optimal_control(ps, 0.2, x);
    EXPECT_GE(c.pi(0), -1e-12);
    EXPECT_GE(c.pi(1), -1e-12);
  }
}

TEST(PrimalValue, KinkedControlContinuous) {
  const auto ps = scenario::primal_surface(scenario::kinked_utility());
  const auto xs = logspace(0.2, 5.0, 400);
  double prev = optimal_control(ps, 0.5, xs[0]).pi(0);
  double max_jump = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double cur = optimal_control(ps, 0.5, xs[i]).pi(0);
    max_jump = std::max(max_jump, std::abs(cur - prev));
    prev = cur;
  }
  // 400 log points over a factor 25: a smooth control moves by O(step) only.
  EXPECT_LT(max_jump, 0.05);
}

TEST(Hamiltonian, ScalarValueAndGrid) {
  const auto em = scenario::merton_market();
  EXPECT_NEAR(hamiltonian(0.0, 1.0, 1.0, -1.0, em), 0.125, 1e-15);
  EXPECT_EQ(hamiltonian(0.0, 1.0, 1.0, 0.0, em), kInf);
  EXPECT_GT(hamiltonian(0.0, 1.0, 1.0, -1e-8, em), 1e6);
  for (double m : {-0.3, -1.0, -4.0}) {
    for (double x : {0.5, 2.0}) {
      const auto grid = oracle::scan_max(
          [&](double p) {
            Eigen::VectorXd pi(1);
            pi(0) = p;
            return hamiltonian_integrand(pi, 0.0, x, 0.7, m, em.params());
          },
          -100.0, 100.0);
      const double h = hamiltonian(0.0, x, 0.7, m, em);
      EXPECT_NEAR(grid.second, h, 1e-6 * std::abs(h));
    }
  }
}

TEST(Hamiltonian, ControlAttainsAndPerturbationsDoNotIncrease) {
  const auto ps = scenario::primal_surface(scenario::kinked_utility());
  const double t = 0.3;
  const double x = 1.2;
  const auto d = u_derivs(ps, t, x);
  const auto pi = optimal_control(ps, t, x).pi;
  const double h = hamiltonian(t, x, d.u_x, d.u_xx, ps.market());
  const double at = hamiltonian_integrand(pi, t, x, d.u_x, d.u_xx, ps.market().params());
  EXPECT_NEAR(at, h, 1e-8 * std::abs(h));
  for (double eps : {-0.1, -1e-3, 1e-3, 0.1}) {
    Eigen::VectorXd p = pi;
    p(0) += eps;
    EXPECT_LE(hamiltonian_integrand(p, t, x, d.u_x, d.u_xx, ps.market().params()), at);
  }
}

TEST(Hjb, MertonResidualTiny) {
  const auto ps = scenario::primal_surface(UtilityFunction::power(0.5));
  const auto rep = hjb_residual_grid(ps, linspace(0.0, 0.95, 8), logspace(0.1, 10.0, 8));
  EXPECT_LE(rep.max, 1e-6);
}

TEST(Hjb, KinkedResidualAndOrder) {
  const auto ps = scenario::primal_surface(scenario::kinked_utility());
  const auto study =
      hjb_refinement_study(ps, {0.0, 0.5, 0.9}, logspace(0.1, 10.0, 10), 5e-4);
  EXPECT_LE(study.fine.max, 1e-4);
  EXPECT_GT(study.observed_order, 1.5);
}

TEST(Growth, MertonAndMonotoneInTime) {
  const auto ps = scenario::primal_surface(UtilityFunction::power(0.5));
  std::vector<double> xs{0.0};
  for (double x : logspace(0.01, 100.0, 12)) xs.push_back(x);
  EXPECT_TRUE(growth_check(ps, {0.0, 0.3, 0.6, 0.9, 1.0}, xs).passed());
  const auto kps = scenario::primal_surface(scenario::kinked_utility());
  EXPECT_TRUE(growth_check(kps, {0.0, 0.5, 0.9, 1.0}, xs).passed());
}
