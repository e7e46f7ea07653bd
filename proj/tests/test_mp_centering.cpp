#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sphericity/mp_centering.hpp"

using namespace sphericity;

TEST(MpIntegral, LogExample) {
  EXPECT_NEAR(mp_integral_log(0.5), std::log(2.0) - 1.0, 1e-15);
  EXPECT_NEAR(mp_integral_log(0.5), -0.30685, 5e-6);
  EXPECT_THROW(mp_integral_log(1.0), DomainError);
  EXPECT_THROW(mp_integral_log(0.0), DomainError);
}

class MpQuadrature : public ::testing::TestWithParam<double> {};

TEST_P(MpQuadrature, MatchesClosedForms) {
  const long double y = GetParam();
  const long double log_moment = oracle::mp_integral([](long double x) { return std::log(x); }, y);
  const long double first = oracle::mp_integral([](long double x) { return x; }, y);
  const long double second = oracle::mp_integral([](long double x) { return x * x; }, y);
  const double yd = static_cast<double>(y);
  EXPECT_NEAR(mp_integral_log(yd), static_cast<double>(log_moment), 1e-7);
  EXPECT_NEAR(mp_integral_identity(yd), static_cast<double>(first), 1e-7);
  EXPECT_NEAR(mp_integral_square(yd), static_cast<double>(second), 1e-7);
}

INSTANTIATE_TEST_SUITE_P(Ratios, MpQuadrature, ::testing::Values(0.1, 0.3, 0.5, 0.9));

TEST(MpIntegral, AboveOneIncludesAtom) {
  const long double y = 2.0L;
  EXPECT_NEAR(mp_integral_identity(2.0),
              static_cast<double>(oracle::mp_integral([](long double x) { return x; }, y)), 1e-7);
  EXPECT_NEAR(mp_integral_square(2.0),
              static_cast<double>(oracle::mp_integral([](long double x) { return x * x; }, y)), 1e-7);
  EXPECT_NEAR(static_cast<double>(oracle::mp_integral([](long double) { return 1.0L; }, y, 1.0L)),
              1.0, 1e-9);
}

TEST(SpikedCentering, Examples) {
  const DimensionRatio ratio(32, 64);
  const auto spike = SpikedModel::single(2.5);
  EXPECT_NEAR(spiked_centering_log(ratio, spike) - mp_integral_log(0.5), std::log(2.5) / 32.0, 1e-15);
  EXPECT_NEAR(std::log(2.5) / 32.0, 0.0286341, 1e-7);
  EXPECT_DOUBLE_EQ(spiked_centering_x(ratio, spike), 1.046875);
  EXPECT_NEAR(spiked_centering_x2(ratio, spike), 1.5 + 2.0 * 1.5 / 64.0 + (6.25 - 1.0) / 32.0, 1e-15);
}

TEST(SpikedCentering, NullReduction) {
  for (auto [p, n] : {std::pair<Index, Index>{32, 64}, {10, 200}, {90, 100}}) {
    const DimensionRatio ratio(p, n);
    const SpikedModel none;
    EXPECT_NEAR(spiked_centering_log(ratio, none), mp_integral_log(ratio.y()), 1e-14);
    EXPECT_NEAR(spiked_centering_x(ratio, none), 1.0, 1e-14);
    EXPECT_NEAR(spiked_centering_x2(ratio, none), 1.0 + ratio.y(), 1e-14);
  }
}

TEST(SpikedCentering, UnitSpikesAreNeutral) {
  const DimensionRatio ratio(40, 100);
  const SpikedModel units({{1.0, 3}, {1.0, 2}});
  EXPECT_EQ(spiked_centering_log(ratio, units), mp_integral_log(ratio.y()));
  EXPECT_EQ(spiked_centering_x(ratio, units), 1.0);
  EXPECT_EQ(spiked_centering_x2(ratio, units), 1.0 + ratio.y());
}

TEST(SpikedCentering, LogNeedsRatioBelowOne) {
  EXPECT_THROW(spiked_centering_log(DimensionRatio(64, 64), SpikedModel()), DomainError);
  EXPECT_NO_THROW(spiked_centering_x(DimensionRatio(128, 64), SpikedModel::single(3.0)));
}

TEST(SpikedModel, Validation) {
  EXPECT_THROW(SpikedModel::single(0.0), DomainError);
  EXPECT_THROW(SpikedModel::single(2.0, 0), DomainError);
  const SpikedModel s({{2.5, 1}, {3.0, 2}});
  EXPECT_EQ(s.total_multiplicity(), 3);
  EXPECT_DOUBLE_EQ(s.weighted_sum([](double a) { return a; }), 8.5);
}
