#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "collapse_lab/error.hpp"
#include "collapse_lab/schedules.hpp"

namespace collapse_lab {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

TEST(Schedule, Coefficients) {
  EXPECT_EQ(coefficient(ScheduleSpec::constant(2.0), 7), 2.0);
  EXPECT_DOUBLE_EQ(coefficient(ScheduleSpec::polynomial(1.5), 4), 8.0);
  EXPECT_DOUBLE_EQ(coefficient(ScheduleSpec::geometric(2.0), 10), 1024.0);
  EXPECT_EQ(coefficient(ScheduleSpec::explicit_coefficients({1.0, 3.0}), 2), 3.0);
}

TEST(Schedule, SampleSizesRoundUpButSnapExactProducts) {
  EXPECT_EQ(sample_size(ScheduleSpec::polynomial(1.5), 4, 100), 800u);
  EXPECT_EQ(sample_size(ScheduleSpec::polynomial(1.1), 2, 100), 215u);  // 214.35 -> 215
  EXPECT_EQ(sample_size(ScheduleSpec::constant(1.0), 1000, 37), 37u);
  EXPECT_EQ(sample_size(ScheduleSpec::polynomial(0.5), 9, 10), 30u);
}

TEST(Schedule, SampleSizeIsNondecreasingForGrowingSchedules) {
  for (const auto& s : {ScheduleSpec::polynomial(0.3), ScheduleSpec::polynomial(1.1), ScheduleSpec::geometric(1.05)}) {
    std::uint64_t prev = 0;
    for (std::uint64_t t = 1; t <= 300; ++t) {
      const auto n = sample_size(s, t, 100);
      ASSERT_GE(n, prev) << s.label() << " t=" << t;
      ASSERT_GE(n, 100u);
      prev = n;
    }
  }
}

TEST(Schedule, Errors) {
  EXPECT_EQ(code_of([] { ScheduleSpec::constant(0.5); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { ScheduleSpec::polynomial(0.0); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { ScheduleSpec::geometric(1.0); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { ScheduleSpec::explicit_coefficients({}); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { ScheduleSpec::explicit_coefficients({1.0, 0.9}); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { coefficient(ScheduleSpec::constant(), 0); }), ErrorCode::kIndex);
  EXPECT_EQ(code_of([] { coefficient(ScheduleSpec::explicit_coefficients({1.0}), 2); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { sample_size(ScheduleSpec::constant(), 1, 0); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { inverse_coefficient_sum(ScheduleSpec::constant(), 0); }), ErrorCode::kIndex);
  EXPECT_EQ(code_of([] { inverse_coefficient_sum_limit(ScheduleSpec::explicit_coefficients({1.0})); }),
            ErrorCode::kConfiguration);
}

TEST(Schedule, OverflowNamesTheStep) {
  try {
    sample_size(ScheduleSpec::geometric(2.0), 70, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScheduleOverflow);
    EXPECT_NE(std::string(e.what()).find("t = 70"), std::string::npos);
  }
  EXPECT_NO_THROW(sample_size(ScheduleSpec::geometric(2.0), 50, 100));
}

TEST(Schedule, Labels) {
  EXPECT_EQ(ScheduleSpec::constant().label(), "constant(c=1)");
  EXPECT_EQ(ScheduleSpec::polynomial(1.1).label(), "polynomial(a=1.1)");
  EXPECT_EQ(ScheduleSpec::explicit_coefficients({1, 2, 3, 4, 5}).label(), "explicit(n=5)");
}

TEST(InverseSum, FiniteHorizons) {
  EXPECT_EQ(inverse_coefficient_sum(ScheduleSpec::constant(), 1), 0.0);
  EXPECT_DOUBLE_EQ(inverse_coefficient_sum(ScheduleSpec::constant(), 10), 9.0);
  EXPECT_DOUBLE_EQ(inverse_coefficient_sum(ScheduleSpec::constant(4.0), 9), 2.0);
  EXPECT_NEAR(inverse_coefficient_sum(ScheduleSpec::polynomial(3.0), 5), 1.177662037037037037, 1e-15);
  EXPECT_DOUBLE_EQ(inverse_coefficient_sum(ScheduleSpec::explicit_coefficients({1, 2, 4}), 4), 1.75);
  EXPECT_NEAR(inverse_coefficient_sum(ScheduleSpec::geometric(2.0), 4), 0.875, 1e-15);
}

TEST(InverseSum, LongHorizonsUseTheTailExpansion) {
  EXPECT_NEAR(inverse_coefficient_sum(ScheduleSpec::polynomial(1.5), 10'000'000), 2.61174289313764327879, 1e-12);
  EXPECT_NEAR(inverse_coefficient_sum(ScheduleSpec::polynomial(1.1), 100'000'000), 8.99955527169724486879, 1e-11);
}

TEST(InverseSum, Limits) {
  const auto poly2 = inverse_coefficient_sum_limit(ScheduleSpec::polynomial(2.0));
  EXPECT_FALSE(poly2.divergent);
  EXPECT_NEAR(poly2.value, std::numbers::pi * std::numbers::pi / 6.0, 1e-13);
  EXPECT_NEAR(inverse_coefficient_sum_limit(ScheduleSpec::polynomial(1.5)).value, 2.61237534868548834335, 1e-12);
  EXPECT_DOUBLE_EQ(inverse_coefficient_sum_limit(ScheduleSpec::geometric(3.0)).value, 0.5);
  EXPECT_TRUE(inverse_coefficient_sum_limit(ScheduleSpec::polynomial(1.0)).divergent);
  EXPECT_TRUE(inverse_coefficient_sum_limit(ScheduleSpec::constant(5.0)).divergent);
}

TEST(DriftRatio, ConstantScheduleGrowsLikeRootT) {
  for (std::uint64_t T : {1u, 4u, 100u, 10000u}) {
    EXPECT_NEAR(drift_ratio(ScheduleSpec::constant(), T), std::sqrt(static_cast<double>(T)), 1e-9);
  }
}

TEST(DriftRatio, FrozenValues) {
  EXPECT_NEAR(drift_ratio(ScheduleSpec::polynomial(1.5), 1'000'000), 65.2859772099412130138, 1e-9);
  const auto poly3 = drift_ratio_limit(ScheduleSpec::polynomial(3.0));
  EXPECT_FALSE(poly3.divergent);
  EXPECT_NEAR(poly3.value, 2.434325235648383699, 1e-12);
  EXPECT_NEAR(drift_ratio_limit(ScheduleSpec::polynomial(2.5)).value, 3.656477215809423619, 1e-12);
  EXPECT_TRUE(drift_ratio_limit(ScheduleSpec::polynomial(2.0)).divergent);
  EXPECT_TRUE(drift_ratio_limit(ScheduleSpec::constant()).divergent);
}

TEST(DriftRatio, ApproachesGeometricLimit) {
  const auto g = ScheduleSpec::geometric(2.0);
  EXPECT_NEAR(drift_ratio(g, 200), drift_ratio_limit(g).value, 1e-12);
}

TEST(CollapseThreshold, Regimes) {
  const RateOrder root_n{1.0, 2.0, RateKind::kPower};
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(1);
  auto t = collapse_threshold(root_n, BiasSpec::unbiased(1));
  EXPECT_EQ(t.regime, CollapseRegime::kMartingale);
  EXPECT_EQ(t.exponent, 1.0);
  t = collapse_threshold(root_n, BiasSpec::of_order(1.0, v));
  EXPECT_EQ(t.regime, CollapseRegime::kSmallBias);
  EXPECT_EQ(t.exponent, 1.0);
  t = collapse_threshold(root_n, BiasSpec::of_order(0.5, v));
  EXPECT_EQ(t.regime, CollapseRegime::kLargeBias);
  EXPECT_EQ(t.exponent, 2.0);
  t = collapse_threshold(RateOrder{0.5, 2.0, RateKind::kPower}, BiasSpec::unbiased(1));
  EXPECT_EQ(t.regime, CollapseRegime::kUnionBound);
  EXPECT_EQ(t.exponent, 4.0);
  EXPECT_EQ(to_string(CollapseRegime::kLargeBias), "large_bias");
}

TEST(CollapseThreshold, Errors) {
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(1);
  EXPECT_EQ(code_of([&] { collapse_threshold(RateOrder{1.0, 2.0, RateKind::kPower}, BiasSpec::of_order(0.3, v)); }),
            ErrorCode::kLemmaViolation);
  EXPECT_EQ(code_of([] { collapse_threshold(*EstimatorSpec::harmonic_weighted_mean().tail(), BiasSpec::unbiased(1)); }),
            ErrorCode::kUnsupported);
}

}  // namespace
}  // namespace collapse_lab
