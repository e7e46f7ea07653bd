#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "sphericity/numerics.hpp"

using namespace sphericity;

TEST(Probability, RejectsOutOfRangeAndNan) {
  EXPECT_NO_THROW(Probability(0.0));
  EXPECT_NO_THROW(Probability(1.0));
  EXPECT_THROW(Probability(-1e-12), DomainError);
  EXPECT_THROW(Probability(1.0 + 1e-12), DomainError);
  EXPECT_THROW(Probability(std::nan("")), DomainError);
  EXPECT_THROW(Probability::clamped(std::nan("")), DomainError);
  EXPECT_EQ(Probability::clamped(1.7).value(), 1.0);
  EXPECT_EQ(Probability::clamped(-0.2).value(), 0.0);
}

TEST(DegreesOfFreedom, MustBePositive) {
  EXPECT_THROW(DegreesOfFreedom(0.0), DomainError);
  EXPECT_THROW(DegreesOfFreedom(-3.0), DomainError);
  EXPECT_EQ(DegreesOfFreedom::sphericity(4).value(), 9.0);
}

TEST(NormalCdf, Examples) {
  EXPECT_EQ(normal_cdf(0.0).value(), 0.5);
  // Oracle value, frozen: Phi(1.6449) = 0.950000...
  const double oracle_value = static_cast<double>(oracle::normal_cdf(1.6449L));
  EXPECT_NEAR(oracle_value, 0.95, 1e-4);
  EXPECT_NEAR(normal_cdf(1.6449).value(), 0.9500048, 1e-7);
  EXPECT_NEAR(normal_cdf(1.6449).value(), oracle_value, 1e-14);
  EXPECT_LT(normal_cdf(-8.0).value(), 1e-14);
  EXPECT_LE(normal_cdf(-8.0).value(), static_cast<double>(oracle::normal_tail_bound(8.0L)));
  EXPECT_THROW(normal_cdf(std::numeric_limits<double>::infinity()), DomainError);
  EXPECT_THROW(normal_cdf(std::nan("")), DomainError);
}

TEST(NormalCdf, MatchesSeriesOracle) {
  for (double x = -7.5; x <= 7.5; x += 0.37) {
    EXPECT_NEAR(normal_cdf(x).value(), static_cast<double>(oracle::normal_cdf(x)), 2e-15) << x;
  }
}

TEST(NormalCdf, Symmetry) {
  for (double x = -30.0; x <= 30.0; x += 0.173) {
    EXPECT_LE(std::abs(normal_cdf(x).value() + normal_cdf(-x).value() - 1.0), 1e-14) << x;
  }
}

TEST(NormalCdf, Monotone) {
  double prev = 0.0;
  for (double x = -10.0; x <= 10.0; x += 0.01) {
    const double v = normal_cdf(x).value();
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(NormalQuantile, Examples) {
  EXPECT_EQ(normal_quantile(0.5), 0.0);
  EXPECT_NEAR(normal_quantile(0.95), 1.6449, 1e-4);
  EXPECT_NEAR(normal_quantile(0.95), static_cast<double>(oracle::normal_quantile(0.95L)), 1e-12);
  for (double q : {0.001, 0.02, 0.3, 0.45}) {
    EXPECT_NEAR(normal_quantile(q), -normal_quantile(1.0 - q), 1e-12);
  }
  EXPECT_THROW(normal_quantile(0.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
  EXPECT_THROW(normal_quantile(-0.1), DomainError);
}

TEST(NormalQuantile, RoundTrip) {
  for (double lq = -8.0; lq <= -0.31; lq += 0.05) {
    for (double q : {std::pow(10.0, lq), 1.0 - std::pow(10.0, lq)}) {
      if (!(q > 1e-8 && q < 1.0 - 1e-8)) continue;
      EXPECT_LE(std::abs(normal_cdf(normal_quantile(q)).value() - q), 1e-10) << q;
    }
  }
}

TEST(ChisqCdf, Examples) {
  EXPECT_EQ(chisq_cdf(0.0, DegreesOfFreedom(9)).value(), 0.0);
  EXPECT_EQ(chisq_cdf(-4.0, DegreesOfFreedom(9)).value(), 0.0);
  EXPECT_NEAR(chisq_cdf(2.0 * std::log(2.0), DegreesOfFreedom(2)).value(), 0.5, 1e-15);
  const double oracle_value = static_cast<double>(oracle::chisq_cdf(16.919L, 9.0L));
  EXPECT_NEAR(oracle_value, 0.95, 1e-3);
  EXPECT_NEAR(chisq_cdf(16.919, DegreesOfFreedom(9)).value(), oracle_value, 1e-13);
}

TEST(ChisqCdf, MatchesGammaOracle) {
  for (double f : {1.0, 2.0, 9.0, 35.0, 527.0, 1829.0}) {
    for (double t = 0.05; t < 4.0; t += 0.15) {
      const double x = f * t;
      const double expected = static_cast<double>(oracle::chisq_cdf(x, f));
      EXPECT_NEAR(chisq_cdf(x, DegreesOfFreedom(f)).value(), expected, 1e-12) << f << ' ' << x;
      EXPECT_NEAR(chisq_upper_tail(x, DegreesOfFreedom(f)).value(), 1.0 - expected, 1e-12);
    }
  }
}

TEST(ChisqCdf, TwoDegreesOfFreedomIsExponential) {
  for (double x = 0.0; x <= 50.0; x += 0.05) {
    EXPECT_LE(std::abs(chisq_cdf(x, DegreesOfFreedom(2)).value() - (1.0 - std::exp(-x / 2.0))), 1e-12);
  }
}

TEST(ChisqCdf, MonotoneInX) {
  for (double f : {1.0, 9.0, 35.0, 527.0}) {
    double prev = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = 4.0 * f * i / 1000.0;
      const double v = chisq_cdf(x, DegreesOfFreedom(f)).value();
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}
