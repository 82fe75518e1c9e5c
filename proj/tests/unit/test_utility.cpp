#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <dualhjb/errors.hpp>
#include <dualhjb/utility.hpp>

using namespace dualhjb;

namespace {

UtilityFunction kinked() {
  return UtilityFunction::min_of_pieces({PowerBranch::linear(1.0), PowerBranch::power(1.0, 0.5)});
}

}  // namespace

TEST(Utility, PowerValue) { EXPECT_DOUBLE_EQ(eval_utility(UtilityFunction::power(0.5), 4.0), 2.0); }

TEST(Utility, KinkedValues) {
  const auto u = kinked();
  EXPECT_EQ(eval_utility(u, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(eval_utility(u, 9.0), 3.0);
  EXPECT_DOUBLE_EQ(eval_utility(u, 0.25), 0.25);
}

TEST(Utility, NegativeWealthIsDomainError) {
  EXPECT_THROW(eval_utility(UtilityFunction::power(0.5), -1.0), DomainError);
  EXPECT_THROW(subdiff_utility(kinked(), 0.0), DomainError);
}

TEST(Utility, Subdifferentials) {
  const auto p = subdiff_utility(UtilityFunction::power(0.5), 4.0);
  EXPECT_DOUBLE_EQ(p.lower, 0.25);
  EXPECT_DOUBLE_EQ(p.upper, 0.25);

  const auto k = subdiff_utility(kinked(), 1.0);
  EXPECT_NEAR(k.lower, 0.5, 1e-14);
  EXPECT_NEAR(k.upper, 1.0, 1e-14);

  const auto lin = subdiff_utility(kinked(), 0.5);
  EXPECT_DOUBLE_EQ(lin.lower, 1.0);
  EXPECT_DOUBLE_EQ(lin.upper, 1.0);
}

TEST(Utility, CrossoverOfKinkedFamily) {
  const auto c = kinked().crossovers();
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0], 1.0, 1e-12);
}

TEST(Utility, SubdifferentialMonotone) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-5.0, 3.0);
  for (const auto& u : {UtilityFunction::power(0.3), kinked(),
                        UtilityFunction::sum_of_powers({{1.0, 0.3}, {1.0, 0.7}})}) {
    for (int i = 0; i < 200; ++i) {
      double x1 = std::exp(d(rng));
      double x2 = std::exp(d(rng));
      if (x1 > x2) std::swap(x1, x2);
      EXPECT_LE(subdiff_utility(u, x2).upper, subdiff_utility(u, x1).lower + 1e-12);
    }
  }
}

TEST(Utility, SecondDerivativeAtKinkIsCapabilityError) {
  EXPECT_THROW(kinked().second_derivative(1.0), CapabilityError);
  EXPECT_NEAR(UtilityFunction::power(0.5).second_derivative(4.0), -0.25 * 0.5 / 4.0, 1e-15);
}

TEST(Utility, TabulatedInterpolatesAndExtends) {
  const auto u = UtilityFunction::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 1.5}, 0.5);
  EXPECT_DOUBLE_EQ(u(0.5), 0.5);
  EXPECT_DOUBLE_EQ(u(1.5), 1.25);
  // C^1 tail: slope at the last node equals the last segment slope.
  EXPECT_NEAR(u.right_slope(2.0), 0.5, 1e-12);
  EXPECT_GT(u(10.0), u(2.0));
}

TEST(Utility, AssumptionChecks) {
  EXPECT_TRUE(validate_assumption1(UtilityFunction::power(0.5)).passed());
  EXPECT_TRUE(validate_assumption1(kinked()).passed());

  const auto linear = UtilityFunction::min_of_pieces({PowerBranch::linear(1.0)});
  const auto lin_report = validate_assumption1(linear);
  EXPECT_FALSE(lin_report.passed());
  bool growth_failed = false;
  for (const auto& c : lin_report.checks()) {
    if (c.name.find("growth") != std::string::npos && !c.passed) growth_failed = true;
  }
  EXPECT_TRUE(growth_failed);
}

TEST(Utility, ConvexTableFailsConcavity) {
  // Samples of x^2: slopes increase.
  std::vector<double> xs{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> us;
  for (double x : xs) us.push_back(x * x);
  bool concavity_failed = false;
  try {
    const auto u = UtilityFunction::tabulated(xs, us, 0.5);
    for (const auto& c : validate_assumption1(u).checks()) {
      if (c.name.find("concav") != std::string::npos && !c.passed) concavity_failed = true;
    }
  } catch (const ConfigError&) {
    concavity_failed = true;  // rejected at construction
  }
  EXPECT_TRUE(concavity_failed);
}

TEST(Utility, PowerExponentOutOfRange) {
  EXPECT_THROW(UtilityFunction::power(1.2), ConfigError);
  EXPECT_THROW(UtilityFunction::power(0.0), ConfigError);
}
