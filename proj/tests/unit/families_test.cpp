#include <algorithm>
#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "collapse_lab/error.hpp"
#include "collapse_lab/families.hpp"
#include "sample_stats.hpp"

namespace collapse_lab {
namespace {

using testing::Moments;

Moments column_moments(const Dataset& d, std::size_t column) {
  Moments m;
  for (std::size_t i = 0; i < d.size(); ++i) m.add(d.row(i)[column]);
  return m;
}

TEST(SampleDataset, GaussianMeanLawOfLargeNumbers) {
  RandomStream rng(1);
  const auto small = sample_dataset(FamilySpec::gaussian_mean_identity(1), ParamPoint{0.0}, 3, rng);
  EXPECT_EQ(small.size(), 3u);
  EXPECT_EQ(small.width(), 1u);
  const auto d = sample_dataset(FamilySpec::gaussian_mean_identity(1), ParamPoint{0.0}, 1'000'000, rng);
  EXPECT_NEAR(column_moments(d, 0).mean(), 0.0, 5e-3);
}

TEST(SampleDataset, UniformSupportAndMaximum) {
  RandomStream rng(2);
  const auto d = sample_dataset(FamilySpec::uniform_upper(10.0), ParamPoint{2.0}, 100000, rng);
  const auto v = d.values();
  EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0 && x <= 2.0; }));
  EXPECT_GT(*std::max_element(v.begin(), v.end()), 1.999);
}

TEST(SampleDataset, ExponentialMeanIsInverseRate) {
  RandomStream rng(3);
  const auto d = sample_dataset(FamilySpec::exponential_rate(), ParamPoint{1.0}, 1'000'000, rng);
  EXPECT_NEAR(column_moments(d, 0).mean(), 1.0, 3e-3);
}

struct MomentCase {
  const char* name;
  FamilySpec family;
  ParamPoint theta;
  double mean;
  double variance;
};

TEST(SampleDataset, MomentsMatchEachFamily) {
  const MomentCase cases[] = {
      {"gaussian_mean", FamilySpec::gaussian_mean_identity(1), ParamPoint{0.3}, 0.3, 1.0},
      {"gaussian_variance", FamilySpec::gaussian_variance(1.0), ParamPoint{2.0}, 1.0, 2.0},
      {"exponential", FamilySpec::exponential_rate(), ParamPoint{2.5}, 0.4, 0.16},
      {"gamma_scale", FamilySpec::gamma_scale(2.0), ParamPoint{1.5}, 3.0, 4.5},
      {"gamma_scale_small_shape", FamilySpec::gamma_scale(0.5), ParamPoint{2.0}, 1.0, 2.0},
      {"uniform_upper", FamilySpec::uniform_upper(10.0), ParamPoint{3.0}, 1.5, 0.75},
  };
  RandomStream rng(4);
  for (const auto& c : cases) {
    const auto d = sample_dataset(c.family, c.theta, 1'000'000, rng);
    const auto m = column_moments(d, 0);
    EXPECT_NEAR(m.mean(), c.mean, 4 * m.standard_error()) << c.name;
    EXPECT_NEAR(m.variance(), c.variance, 4 * m.variance_standard_error()) << c.name;
  }
}

TEST(SampleDataset, PositiveSupportFamilies) {
  RandomStream rng(5);
  for (const auto& [family, theta] : {std::pair{FamilySpec::exponential_rate(3), ParamPoint{1.0, 2.0, 50.0}},
                                      std::pair{FamilySpec::gamma_scale(0.2), ParamPoint{1e-3}}}) {
    const auto d = sample_dataset(family, theta, 50000, rng);
    const auto v = d.values();
    EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; })) << family.label();
  }
}

double covariance_error(const FamilySpec& family, const Eigen::MatrixXd& sigma, RandomStream& rng) {
  const auto p = static_cast<std::size_t>(sigma.rows());
  const auto d = sample_dataset(family, ParamPoint::constant(p, 1.0), 1'000'000, rng);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      d.values().data(), static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(p));
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(d.size() - 1);
  return (cov - sigma).norm();
}

// At n = 1e6 the expected squared Frobenius error is (tr(S)^2 + tr(S^2)) / n,
// about 0.0085^2 for p = 8; the root mean square over four datasets is
// compared against 1e-2 and against that value.
TEST(SampleDataset, CholeskyCovarianceConverges) {
  Eigen::MatrixXd sigma2(2, 2);
  sigma2 << 2.0, 0.6, 0.6, 1.0;
  Eigen::MatrixXd sigma4 = Eigen::MatrixXd::Identity(4, 4);
  sigma4(0, 3) = sigma4(3, 0) = -0.4;
  sigma4(1, 2) = sigma4(2, 1) = 0.3;
  const Eigen::MatrixXd sigma8 = Eigen::MatrixXd::Identity(8, 8);
  RandomStream rng(6);
  for (const auto& sigma : {sigma2, sigma4, sigma8}) {
    const auto family = FamilySpec::gaussian_mean(sigma);
    double mean_sq = 0.0;
    for (int rep = 0; rep < 4; ++rep) mean_sq += std::pow(covariance_error(family, sigma, rng), 2) / 4.0;
    const double theory = ((sigma.trace() * sigma.trace()) + (sigma * sigma).trace()) / 1e6;
    EXPECT_LT(std::sqrt(mean_sq), 1e-2) << "p = " << sigma.rows();
    EXPECT_NEAR(mean_sq / theory, 1.0, 0.5) << "p = " << sigma.rows();
  }
}

TEST(SampleDataset, LogisticLabelsAreCalibrated) {
  const ParamPoint theta{1.0, -1.0};
  RandomStream rng(7);
  const auto d = sample_dataset(FamilySpec::logistic_regression(2), theta, 1'000'000, rng);
  ASSERT_EQ(d.width(), 3u);
  std::vector<std::pair<double, double>> scored;  // (theta'x, label)
  scored.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto r = d.row(i);
    ASSERT_TRUE(r[2] == 0.0 || r[2] == 1.0);
    scored.emplace_back(r[0] - r[1], r[2]);
  }
  std::sort(scored.begin(), scored.end());
  const std::size_t bin = scored.size() / 10;
  for (std::size_t b = 0; b < 10; ++b) {
    double hits = 0.0, expected = 0.0, var = 0.0;
    for (std::size_t i = b * bin; i < (b + 1) * bin; ++i) {
      const double p = logistic_sigmoid(scored[i].first);
      hits += scored[i].second;
      expected += p;
      var += p * (1.0 - p);
    }
    EXPECT_NEAR(hits, expected, 3.0 * std::sqrt(var)) << "decile " << b;
  }
}

TEST(SampleDataset, DeterministicForEqualSeeds) {
  const auto family = FamilySpec::gamma_scale(2.0);
  RandomStream a(99), b(99);
  const auto da = sample_dataset(family, ParamPoint{1.0}, 1000, a);
  const auto db = sample_dataset(family, ParamPoint{1.0}, 1000, b);
  ASSERT_EQ(da.values().size(), db.values().size());
  EXPECT_EQ(std::memcmp(da.values().data(), db.values().data(), da.values().size_bytes()), 0);
}

TEST(SampleDataset, Errors) {
  RandomStream rng(8);
  try {
    sample_dataset(FamilySpec::uniform_upper(10.0), ParamPoint{0.5}, 10, rng);
    FAIL() << "expected a parameter-domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParameterDomain);
  }
  try {
    sample_dataset(FamilySpec::exponential_rate(), ParamPoint{1.0}, 0, rng);
    FAIL() << "expected an empty-dataset error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

TEST(ValidateParam, NamesTheViolatedConstraint) {
  const auto low = validate_param(FamilySpec::uniform_upper(10.0), ParamPoint{0.5});
  EXPECT_FALSE(low.valid);
  EXPECT_EQ(low.reason, "below lower bound 1");
  EXPECT_FALSE(validate_param(FamilySpec::uniform_upper(10.0), ParamPoint{10.5}).valid);
  EXPECT_TRUE(validate_param(FamilySpec::gaussian_variance(0.0), ParamPoint{1.0}).valid);
  const auto negative = validate_param(FamilySpec::exponential_rate(), ParamPoint{-1.0});
  EXPECT_FALSE(negative.valid);
  EXPECT_EQ(negative.reason, "rate must be positive");
  EXPECT_FALSE(validate_param(FamilySpec::gaussian_variance(0.0), ParamPoint{0.0}).valid);
  EXPECT_FALSE(validate_param(FamilySpec::gaussian_mean_identity(2), ParamPoint{1.0}).valid);
  EXPECT_FALSE(validate_param(FamilySpec::gaussian_mean_identity(1), ParamPoint{std::nan("")}).valid);
  EXPECT_FALSE(validate_param(FamilySpec::gamma_scale(2.0), ParamPoint{0.0}).valid);
}

TEST(FamilySpec, RejectsNonPositiveDefiniteCovariance) {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  try {
    FamilySpec::gaussian_mean(bad);
    FAIL() << "expected a factorization error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFactorization);
  }
  EXPECT_THROW(FamilySpec::uniform_upper(0.5), Error);
  EXPECT_THROW(FamilySpec::gamma_scale(0.0), Error);
}

TEST(FamilySpec, Labels) {
  EXPECT_EQ(FamilySpec::gamma_scale(2.0).label(), "gamma_scale(k=2)");
  EXPECT_EQ(FamilySpec::gaussian_mean_identity(2).label(), "gaussian_mean(p=2)");
  EXPECT_EQ(FamilySpec::logistic_regression(2).observation_width(), 3u);
  EXPECT_EQ(FamilySpec::logistic_regression(2).param_dim(), 2u);
}

}  // namespace
}  // namespace collapse_lab
