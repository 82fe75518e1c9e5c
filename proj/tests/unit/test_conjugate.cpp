#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <dualhjb/conjugate.hpp>
#include <dualhjb/errors.hpp>
#include <dualhjb/grid.hpp>

#include "oracles.hpp"

using namespace dualhjb;

namespace {

UtilityFunction kinked() {
  return UtilityFunction::min_of_pieces({PowerBranch::linear(1.0), PowerBranch::power(1.0, 0.5)});
}

double grid_conj(const UtilityFunction& u, double y) {
  return oracle::conjugate([&](double x) { return u(x); }, y);
}

}  // namespace

TEST(Conjugate, PowerAtOne) {
  const auto d = conjugate(UtilityFunction::power(0.5));
  EXPECT_NEAR(d(1.0), 0.25, 1e-14);
  EXPECT_NEAR(grid_conj(UtilityFunction::power(0.5), 1.0), 0.25, 1e-10);
  EXPECT_TRUE(d.has_closed_form());
}

TEST(Conjugate, KinkedBranches) {
  const auto u = kinked();
  const auto d = conjugate(u);
  EXPECT_NEAR(d(0.25), 1.0, 1e-14);
  EXPECT_EQ(d(2.0), 0.0);
  EXPECT_NEAR(d(0.75), 0.25, 1e-14);
  for (double y : {0.25, 0.75, 2.0}) EXPECT_NEAR(d(y), grid_conj(u, y), 1e-9) << y;
  EXPECT_NEAR(d.vanishes_from(), 1.0, 1e-14);
}

TEST(Conjugate, KinkedMaximizerInterval) {
  // Slope 1 linear stretch: every x in [0, 1] is a maximizer at y = 1.
  const auto m = conjugate(kinked()).maximizers(1.0);
  EXPECT_NEAR(m.lo, 0.0, 1e-14);
  EXPECT_NEAR(m.hi, 1.0, 1e-12);
}

TEST(Conjugate, GenericSolver) {
  EXPECT_NEAR(eval_conjugate_generic(UtilityFunction::power(0.5), 0.5), 0.5, 1e-10);
  EXPECT_EQ(eval_conjugate_generic(kinked(), 10.0), 0.0);
  EXPECT_THROW(eval_conjugate_generic(kinked(), 0.0), DomainError);
}

TEST(Conjugate, FenchelYoung) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  const auto sum = UtilityFunction::sum_of_powers({{1.0, 0.3}, {1.0, 0.7}});
  for (const auto& u : {UtilityFunction::power(0.5), kinked(), sum}) {
    const auto dual = conjugate(u);
    for (int i = 0; i < 100; ++i) {
      const double x = std::exp(d(rng));
      const double y = std::exp(d(rng));
      EXPECT_GE(dual(y) + x * y, u(x) - 1e-12);
    }
  }
}

TEST(Conjugate, GrowthConstant) {
  EXPECT_DOUBLE_EQ(dual_growth_constant(1.0, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(dual_growth_constant(4.0, 0.5), 4.0);
  EXPECT_LE(dual_growth_constant(1.0, 0.3), dual_growth_constant(2.0, 0.3));
  EXPECT_THROW(dual_growth_constant(1.0, 1.0), DomainError);
}

TEST(Conjugate, BidualityOnSmoothFamilies) {
  const auto sum = UtilityFunction::sum_of_powers({{1.0, 0.3}, {1.0, 0.7}});
  for (const auto& u : {UtilityFunction::power(0.5), UtilityFunction::power(0.3), sum}) {
    const auto dual = conjugate(u);
    for (double y : logspace(0.1, 10.0, 9)) {
      const double ref = grid_conj(u, y);
      EXPECT_NEAR(dual(y), ref, 1e-6 * ref) << u.describe() << " y=" << y;
    }
    for (double x : logspace(0.1, 10.0, 9)) {
      const auto inf = oracle::scan_min([&](double s) { return dual(std::exp(s)) + x * std::exp(s); },
                                        -20.0, 20.0);
      EXPECT_NEAR(inf.second, u(x), 1e-6 * u(x)) << u.describe() << " x=" << x;
    }
  }
}

TEST(Conjugate, DecreasingConvexAndBounded) {
  const auto ys = logspace(1e-3, 1e3, 200);
  const auto xs = logspace(1e-3, 1e3, 50);
  for (const auto& u : {UtilityFunction::power(0.5), kinked()}) {
    const auto dual = conjugate(u);
    EXPECT_TRUE(validate_dual_utility(dual, ys, xs).passed()) << u.describe();
    for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
      const double h0 = ys[i] - ys[i - 1];
      const double h1 = ys[i + 1] - ys[i];
      const double dd = ((dual(ys[i + 1]) - dual(ys[i])) / h1 - (dual(ys[i]) - dual(ys[i - 1])) / h0);
      EXPECT_GE(dd, -1e-10);
    }
  }
}
