#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "collapse_lab/random.hpp"

namespace collapse_lab {

/// A point in parameter space; the state of the recursive-training walk.
class ParamPoint {
 public:
  ParamPoint() = default;
  explicit ParamPoint(Eigen::VectorXd values) : values_(std::move(values)) {}
  ParamPoint(std::initializer_list<double> values);

  static ParamPoint scalar(double value) { return ParamPoint{value}; }
  static ParamPoint constant(std::size_t dim, double value) {
    return ParamPoint(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), value));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.size()); }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }
  bool all_finite() const noexcept { return values_.allFinite(); }

  friend bool operator==(const ParamPoint& a, const ParamPoint& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
};

struct GaussianMeanFamily {
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd cholesky;  // lower factor of covariance
};

/// theta is sigma^2; the mean is known.
struct GaussianVarianceFamily {
  double mean = 0.0;
};

/// `dim` independent exponential coordinates, each with its own rate.
struct ExponentialRateFamily {
  std::size_t dim = 1;
};

struct GammaScaleFamily {
  double shape = 2.0;
};

/// Unif(0, theta) with theta restricted to [1, cap].
struct UniformUpperFamily {
  double cap = 10.0;
};

/// y ~ Bernoulli(1 / (1 + exp(-theta' x))), x ~ N(0, I).
struct LogisticRegressionFamily {
  std::size_t covariate_dim = 2;
};

class FamilySpec {
 public:
  using Variant = std::variant<GaussianMeanFamily, GaussianVarianceFamily, ExponentialRateFamily,
                               GammaScaleFamily, UniformUpperFamily, LogisticRegressionFamily>;

  /// Throws kFactorization when the covariance is not symmetric positive definite.
  static FamilySpec gaussian_mean(const Eigen::MatrixXd& covariance);
  static FamilySpec gaussian_mean_identity(std::size_t dim);
  static FamilySpec gaussian_variance(double mean);
  static FamilySpec exponential_rate(std::size_t dim = 1);
  static FamilySpec gamma_scale(double shape);
  static FamilySpec uniform_upper(double cap);
  static FamilySpec logistic_regression(std::size_t covariate_dim);

  const Variant& variant() const noexcept { return variant_; }
  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&variant_);
  }

  std::size_t param_dim() const;
  /// Doubles per observation row (logistic rows carry covariates then the label).
  std::size_t observation_width() const;
  std::string kind() const;
  /// Short human-readable identifier used in result files, e.g. "gamma_scale(k=2)".
  std::string label() const;

 private:
  explicit FamilySpec(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

/// Row-major block of n observations of a fixed width.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t rows, std::size_t width) : values_(rows * width), rows_(rows), width_(width) {}

  std::size_t size() const noexcept { return rows_; }
  std::size_t width() const noexcept { return width_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * width_, width_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * width_, width_}; }
  std::span<const double> values() const noexcept { return values_; }

  /// Reshapes in place, keeping capacity so chains can reuse one buffer.
  void reshape(std::size_t rows, std::size_t width) {
    values_.resize(rows * width);
    rows_ = rows;
    width_ = width;
  }

  static Dataset from_rows(const std::vector<std::vector<double>>& rows);

 private:
  std::vector<double> values_;
  std::size_t rows_ = 0;
  std::size_t width_ = 0;
};

struct ParamVerdict {
  bool valid = true;
  std::string reason;

  explicit operator bool() const noexcept { return valid; }
};

ParamVerdict validate_param(const FamilySpec& family, const ParamPoint& theta);

/// n i.i.d. draws from P_theta. Throws kParameterDomain for theta outside
/// the family's space and kEmptyDataset for n == 0.
Dataset sample_dataset(const FamilySpec& family, const ParamPoint& theta, std::uint64_t n, RandomStream& rng);

/// Same draws as sample_dataset, written into a caller-owned buffer.
void sample_dataset_into(const FamilySpec& family, const ParamPoint& theta, std::uint64_t n, RandomStream& rng,
                         Dataset& out);

/// Logistic link, evaluated without overflow for large |z|.
double logistic_sigmoid(double z) noexcept;

}  // namespace collapse_lab
