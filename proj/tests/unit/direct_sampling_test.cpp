#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "collapse_lab/direct_sampling.hpp"
#include "collapse_lab/error.hpp"

namespace collapse_lab {
namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

struct Pair {
  const char* name;
  FamilySpec family;
  EstimatorSpec estimator;
  ParamPoint theta;
  std::uint64_t n;
};

TEST(DirectSampling, MatchesDatasetLawForEveryPair) {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 0.5, 0.5, 2.0;
  const Pair pairs[] = {
      {"sample_mean", FamilySpec::gaussian_mean_identity(1), EstimatorSpec::sample_mean(1), ParamPoint{0.5}, 7},
      {"sample_mean_prefix", FamilySpec::gaussian_mean_identity(1), EstimatorSpec::sample_mean(1, 3), ParamPoint{0.0}, 12},
      {"correlated_mean", FamilySpec::gaussian_mean(sigma), EstimatorSpec::sample_mean(2), ParamPoint{0.0, 1.0}, 5},
      {"biased_mean", FamilySpec::gaussian_mean_identity(1), EstimatorSpec::biased_mean(1, 2.0), ParamPoint{0.0}, 9},
      {"harmonic", FamilySpec::gaussian_mean_identity(1), EstimatorSpec::harmonic_weighted_mean(), ParamPoint{1.0}, 15},
      {"max_obs", FamilySpec::uniform_upper(10), EstimatorSpec::max_observation(10), ParamPoint{3.0}, 4},
      {"exp_mle", FamilySpec::exponential_rate(), EstimatorSpec::exponential_mle(), ParamPoint{2.0}, 3},
      {"gamma_mle", FamilySpec::gamma_scale(0.7), EstimatorSpec::gamma_scale_mle(0.7), ParamPoint{1.5}, 6},
      {"variance", FamilySpec::gaussian_variance(1.0), EstimatorSpec::variance_known_mean(1.0), ParamPoint{2.0}, 5},
  };
  constexpr int kDraws = 20000;
  // 99.9% critical value of the two-sample statistic at equal sizes.
  const double critical = 1.95 * std::sqrt(2.0 / kDraws);
  RandomStream rng(606);
  Dataset buffer;
  for (const auto& p : pairs) {
    ASSERT_TRUE(has_direct_sampler(p.family, p.estimator)) << p.name;
    for (std::size_t coord = 0; coord < p.theta.dim(); ++coord) {
      std::vector<double> direct, literal;
      RandomStream a = RandomStream::substream(606, coord), b = RandomStream::substream(607, coord);
      for (int r = 0; r < kDraws; ++r) {
        direct.push_back(sample_estimate(p.family, p.estimator, p.theta, p.n, a)[coord]);
        sample_dataset_into(p.family, p.theta, p.n, b, buffer);
        literal.push_back(estimate(p.estimator, buffer)[coord]);
      }
      EXPECT_LT(ks_statistic(direct, literal), critical) << p.name << " coordinate " << coord;
    }
  }
}

TEST(DirectSampling, LogisticHasNoClosedForm) {
  const auto family = FamilySpec::logistic_regression(2);
  const auto est = EstimatorSpec::logistic_mle(2);
  EXPECT_FALSE(has_direct_sampler(family, est));
  RandomStream rng(1);
  try {
    sample_estimate(family, est, ParamPoint{1.0, -1.0}, 100, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

TEST(DirectSampling, RejectsInvalidParameters) {
  RandomStream rng(2);
  try {
    sample_estimate(FamilySpec::exponential_rate(), EstimatorSpec::exponential_mle(), ParamPoint{-1.0}, 10, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParameterDomain);
  }
  EXPECT_FALSE(has_direct_sampler(FamilySpec::gamma_scale(2.0), EstimatorSpec::exponential_mle()));
}

}  // namespace
}  // namespace collapse_lab
