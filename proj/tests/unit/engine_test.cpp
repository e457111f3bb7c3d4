#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "collapse_lab/engine.hpp"
#include "collapse_lab/error.hpp"
#include "sample_stats.hpp"

namespace collapse_lab {
namespace {

using testing::Moments;

ChainConfig gaussian_chain(ScheduleSpec schedule, std::uint64_t n0, std::uint64_t T, std::uint64_t seed,
                           SamplingMode mode = SamplingMode::kDatasets) {
  return ChainConfig{FamilySpec::gaussian_mean_identity(1), EstimatorSpec::sample_mean(1), std::move(schedule), n0,
                     T,  ParamPoint{0.0},  seed,  mode};
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

TEST(RunChain, RecordsStepSizesAndTelescopingIncrements) {
  const ChainConfig config{FamilySpec::exponential_rate(2), EstimatorSpec::exponential_mle(2),
                           ScheduleSpec::polynomial(1.5), 40, 6, ParamPoint{1.0, 2.0}, 5, SamplingMode::kDatasets};
  RandomStream rng(config.seed);
  const auto traj = run_chain(config, rng);
  ASSERT_FALSE(traj.failure);
  ASSERT_EQ(traj.length(), 6u);
  const std::vector<std::uint64_t> expected_sizes{40, 40, 114, 208, 320, 448};
  EXPECT_EQ(traj.step_sizes, expected_sizes);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  for (const auto& xi : traj.increments) sum += xi.values();
  EXPECT_LT((sum - (traj.estimates.back().values() - config.theta_star.values())).norm(), 1e-12);
}

TEST(RunChain, SameSeedSameTrajectory) {
  const auto config = gaussian_chain(ScheduleSpec::constant(), 50, 20, 77);
  RandomStream a(1), b(1);
  const auto ta = run_chain(config, a);
  const auto tb = run_chain(config, b);
  EXPECT_EQ(ta.estimates, tb.estimates);
}

TEST(RunChain, InvalidEstimateTruncatesTheChain) {
  // Every draw from Unif(0, 1) is below the parameter space's lower bound 1.
  const ChainConfig config{FamilySpec::uniform_upper(10), EstimatorSpec::max_observation(10),
                           ScheduleSpec::constant(), 10, 5, ParamPoint{1.0}, 3, SamplingMode::kDatasets};
  RandomStream rng(3);
  const auto traj = run_chain(config, rng);
  ASSERT_TRUE(traj.failure);
  EXPECT_EQ(traj.failure->step, 1u);
  EXPECT_EQ(traj.failure->cause, "below lower bound 1");
  EXPECT_TRUE(traj.estimates.empty());
  EXPECT_FALSE(improvement_indicator(traj, config.theta_star));

  const auto summary = run_monte_carlo(config, {.replications = 10});
  const auto& failure = summary.metric("failure_rate");
  EXPECT_EQ(failure.value.front(), 1.0);
  EXPECT_TRUE(std::isnan(summary.metric("mean_sq_error").value.front()));
  EXPECT_EQ(summary.metric("mean_sq_error").exclusions.back(), 10u);
}

TEST(ImprovementIndicator, ComparesFirstAndLastErrors) {
  Trajectory t;
  t.estimates = {ParamPoint{2.0}, ParamPoint{5.0}, ParamPoint{-1.0}};
  EXPECT_EQ(improvement_indicator(t, ParamPoint{0.0}), true);
  t.estimates.back() = ParamPoint{-2.0};
  EXPECT_EQ(improvement_indicator(t, ParamPoint{0.0}), false);
  t.estimates.resize(1);
  EXPECT_FALSE(improvement_indicator(t, ParamPoint{0.0}).has_value());
}

TEST(MonteCarlo, IdenticalAcrossWorkerCounts) {
  const ChainConfig config{FamilySpec::gaussian_mean_identity(2), EstimatorSpec::sample_mean(2),
                           ScheduleSpec::polynomial(1.0), 30, 8, ParamPoint{0.0, 0.0}, 2024, SamplingMode::kDatasets};
  const auto reference = run_monte_carlo(config, {.replications = 1500, .parallelism = 1});
  for (unsigned workers : {4u, 8u}) {
    const auto other = run_monte_carlo(config, {.replications = 1500, .parallelism = workers});
    ASSERT_EQ(other.series.size(), reference.series.size());
    for (std::size_t k = 0; k < reference.series.size(); ++k) {
      EXPECT_TRUE(same_bits(reference.series[k].value, other.series[k].value))
          << reference.series[k].name << " with " << workers << " workers";
      EXPECT_TRUE(same_bits(reference.series[k].ci_high, other.series[k].ci_high));
    }
  }
}

TEST(MonteCarlo, MetricSetDependsOnDimension) {
  const auto scalar = run_monte_carlo(gaussian_chain(ScheduleSpec::constant(), 10, 3, 1), {.replications = 20});
  EXPECT_TRUE(scalar.find("diversity"));
  EXPECT_TRUE(scalar.find("improvement"));
  EXPECT_TRUE(std::isnan(scalar.metric("improvement").value.front()));
  const ChainConfig vec{FamilySpec::gaussian_mean_identity(2), EstimatorSpec::sample_mean(2),
                        ScheduleSpec::constant(),  10, 1, ParamPoint{0.0, 0.0}, 1, SamplingMode::kDatasets};
  const auto multi = run_monte_carlo(vec, {.replications = 20});
  EXPECT_FALSE(multi.find("diversity"));
  EXPECT_FALSE(multi.find("improvement"));
  EXPECT_THROW(multi.metric("diversity"), Error);
}

TEST(MonteCarlo, ConfidenceIntervalsBracketTheValue) {
  const auto s = run_monte_carlo(gaussian_chain(ScheduleSpec::constant(), 5, 30, 9), {.replications = 300});
  for (const auto& series : s.series) {
    for (std::size_t i = 0; i < series.value.size(); ++i) {
      if (std::isnan(series.value[i])) continue;
      EXPECT_LE(series.ci_low[i], series.value[i]) << series.name;
      EXPECT_GE(series.ci_high[i], series.value[i]) << series.name;
      if (series.kind == MetricKind::kProbability) {
        EXPECT_GE(series.ci_low[i], 0.0);
        EXPECT_LE(series.ci_high[i], 1.0);
      }
    }
  }
}

TEST(MonteCarlo, ConstantScheduleMseGrowsLinearly) {
  // theta_t is a sum of t independent N(0, 1/n0) increments.
  const std::uint64_t n0 = 20, T = 40;
  const auto s = run_monte_carlo(gaussian_chain(ScheduleSpec::constant(), n0, T, 31), {.replications = 20000});
  const auto& mse = s.metric("mean_sq_error");
  for (std::uint64_t t : {1u, 10u, 40u}) {
    const double expected = static_cast<double>(t) / static_cast<double>(n0);
    const double half = (mse.ci_high[t - 1] - mse.value[t - 1]);
    EXPECT_NEAR(mse.value[t - 1], expected, 2.5 * half) << "t = " << t;
  }
  EXPECT_LT(mse.value[9], mse.value[39]);
}

TEST(MonteCarlo, IncrementsAreUncorrelatedAndCentered) {
  const auto config = gaussian_chain(ScheduleSpec::polynomial(1.0), 10, 6, 41);
  Moments m2, m5, cross, last;
  for (std::uint64_t r = 0; r < 40000; ++r) {
    RandomStream rng = RandomStream::substream(config.seed, r);
    const auto traj = run_chain(config, rng);
    const double x2 = traj.increments[1][0], x5 = traj.increments[4][0];
    m2.add(x2);
    m5.add(x5);
    cross.add(x2 * x5);
    last.add(traj.estimates.back()[0]);
  }
  EXPECT_NEAR(m2.mean(), 0.0, 4 * m2.standard_error());
  EXPECT_NEAR(m5.mean(), 0.0, 4 * m5.standard_error());
  EXPECT_NEAR(cross.mean(), 0.0, 4 * cross.standard_error());
  // Var xi_t = 1 / n_{t-1} with n_4 = 40.
  EXPECT_NEAR(m5.variance(), 1.0 / 40.0, 4 * m5.variance_standard_error());
  // theta_T is a sum of independent Gaussians, hence Gaussian.
  EXPECT_NEAR(last.kurtosis(), 3.0, 0.1);
}

TEST(MonteCarlo, HugeScheduleFreezesTheFirstEstimate) {
  std::vector<double> c(9, 1e8);
  const auto config = gaussian_chain(ScheduleSpec::explicit_coefficients(c), 10, 10, 51, SamplingMode::kSufficientStatistic);
  const auto s = run_monte_carlo(config, {.replications = 50000});
  const auto& mse = s.metric("mean_sq_error");
  EXPECT_NEAR(mse.value.back(), 0.1 * (1.0 + 9e-8), 3 * (mse.ci_high.back() - mse.value.back()));
  EXPECT_NEAR(mse.value.back(), mse.value.front(), 1e-3);
}

TEST(MonteCarlo, RejectsInvalidConfigsAndBudgetOverruns) {
  auto bad = gaussian_chain(ScheduleSpec::constant(), 0, 5, 1);
  try {
    run_monte_carlo(bad, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
    EXPECT_NE(std::string(e.what()).find("n0 must be >= 1"), std::string::npos);
  }
  const ChainConfig logistic_direct{FamilySpec::logistic_regression(2), EstimatorSpec::logistic_mle(2),
                                    ScheduleSpec::constant(), 100, 2, ParamPoint{1.0, -1.0}, 1,
                                    SamplingMode::kSufficientStatistic};
  EXPECT_FALSE(validate_chain(logistic_direct).empty());
  const auto big = gaussian_chain(ScheduleSpec::constant(), 1000, 1000, 1);
  EXPECT_DOUBLE_EQ(chain_work(big, 100), 1e8);
  try {
    run_monte_carlo(big, {.replications = 100, .budget = 1e7});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudget);
  }
}

TEST(MonteCarlo, KeepsRequestedTrajectories) {
  const auto s = run_monte_carlo(gaussian_chain(ScheduleSpec::constant(), 10, 4, 8),
                                 {.replications = 30, .keep_trajectories = 3});
  ASSERT_EQ(s.trajectories.size(), 3u);
  RandomStream rng = RandomStream::substream(8, 2);
  EXPECT_EQ(run_chain(gaussian_chain(ScheduleSpec::constant(), 10, 4, 8), rng).estimates, s.trajectories[2].estimates);
}

}  // namespace
}  // namespace collapse_lab
