#include "collapse_lab/families.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "collapse_lab/error.hpp"
#include "overloaded.hpp"
#include "text.hpp"

namespace collapse_lab {

namespace {

using detail::Overloaded;

ParamVerdict invalid(std::string reason) { return {false, std::move(reason)}; }

}  // namespace

ParamPoint::ParamPoint(std::initializer_list<double> values)
    : values_(static_cast<Eigen::Index>(values.size())) {
  Eigen::Index i = 0;
  for (double v : values) values_(i++) = v;
}

FamilySpec FamilySpec::gaussian_mean(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() == 0 || covariance.rows() != covariance.cols()) {
    throw Error(ErrorCode::kFactorization, "covariance must be a non-empty square matrix");
  }
  if (!covariance.allFinite() || !covariance.isApprox(covariance.transpose(), 1e-12)) {
    throw Error(ErrorCode::kFactorization, "covariance must be finite and symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kFactorization, "covariance is not positive definite (Cholesky failed)");
  }
  return FamilySpec(GaussianMeanFamily{covariance, llt.matrixL()});
}

FamilySpec FamilySpec::gaussian_mean_identity(std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::kConfiguration, "gaussian_mean dimension must be >= 1");
  const auto p = static_cast<Eigen::Index>(dim);
  return gaussian_mean(Eigen::MatrixXd::Identity(p, p));
}

FamilySpec FamilySpec::gaussian_variance(double mean) {
  if (!std::isfinite(mean)) throw Error(ErrorCode::kConfiguration, "gaussian_variance mean must be finite");
  return FamilySpec(GaussianVarianceFamily{mean});
}

FamilySpec FamilySpec::exponential_rate(std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::kConfiguration, "exponential dimension must be >= 1");
  return FamilySpec(ExponentialRateFamily{dim});
}

FamilySpec FamilySpec::gamma_scale(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw Error(ErrorCode::kConfiguration, "gamma shape must be positive");
  }
  return FamilySpec(GammaScaleFamily{shape});
}

FamilySpec FamilySpec::uniform_upper(double cap) {
  if (!(cap >= 1.0) || !std::isfinite(cap)) {
    throw Error(ErrorCode::kConfiguration, "uniform cap M must satisfy M >= 1");
  }
  return FamilySpec(UniformUpperFamily{cap});
}

FamilySpec FamilySpec::logistic_regression(std::size_t covariate_dim) {
  if (covariate_dim == 0) throw Error(ErrorCode::kConfiguration, "logistic covariate dimension must be >= 1");
  return FamilySpec(LogisticRegressionFamily{covariate_dim});
}

std::size_t FamilySpec::param_dim() const {
  return std::visit(Overloaded{
                        [](const GaussianMeanFamily& f) { return static_cast<std::size_t>(f.covariance.rows()); },
                        [](const ExponentialRateFamily& f) { return f.dim; },
                        [](const LogisticRegressionFamily& f) { return f.covariate_dim; },
                        [](const auto&) { return std::size_t{1}; },
                    },
                    variant_);
}

std::size_t FamilySpec::observation_width() const {
  if (const auto* f = get_if<LogisticRegressionFamily>()) return f->covariate_dim + 1;
  return param_dim();
}

std::string FamilySpec::kind() const {
  return std::visit(Overloaded{
                        [](const GaussianMeanFamily&) { return std::string("gaussian_mean"); },
                        [](const GaussianVarianceFamily&) { return std::string("gaussian_variance"); },
                        [](const ExponentialRateFamily&) { return std::string("exponential"); },
                        [](const GammaScaleFamily&) { return std::string("gamma_scale"); },
                        [](const UniformUpperFamily&) { return std::string("uniform_upper"); },
                        [](const LogisticRegressionFamily&) { return std::string("logistic"); },
                    },
                    variant_);
}

std::string FamilySpec::label() const {
  return std::visit(
      Overloaded{
          [](const GaussianMeanFamily& f) {
            const auto p = f.covariance.rows();
            const bool identity = f.covariance.isIdentity(0.0);
            return "gaussian_mean(p=" + std::to_string(p) + (identity ? ")" : ";sigma=custom)");
          },
          [](const GaussianVarianceFamily& f) { return "gaussian_variance(mu=" + detail::compact(f.mean) + ")"; },
          [](const ExponentialRateFamily& f) { return "exponential(p=" + std::to_string(f.dim) + ")"; },
          [](const GammaScaleFamily& f) { return "gamma_scale(k=" + detail::compact(f.shape) + ")"; },
          [](const UniformUpperFamily& f) { return "uniform_upper(M=" + detail::compact(f.cap) + ")"; },
          [](const LogisticRegressionFamily& f) { return "logistic(d=" + std::to_string(f.covariate_dim) + ")"; },
      },
      variant_);
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t width = rows.empty() ? 0 : rows.front().size();
  Dataset out(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) throw Error(ErrorCode::kConfiguration, "ragged dataset rows");
    for (std::size_t j = 0; j < width; ++j) out.row(i)[j] = rows[i][j];
  }
  return out;
}

ParamVerdict validate_param(const FamilySpec& family, const ParamPoint& theta) {
  if (theta.dim() != family.param_dim()) {
    return invalid("expected dimension " + std::to_string(family.param_dim()) + ", got " +
                   std::to_string(theta.dim()));
  }
  if (!theta.all_finite()) return invalid("non-finite coordinate");
  return std::visit(
      Overloaded{
          [](const GaussianMeanFamily&) { return ParamVerdict{}; },
          [](const LogisticRegressionFamily&) { return ParamVerdict{}; },
          [&](const GaussianVarianceFamily&) {
            return theta[0] > 0.0 ? ParamVerdict{} : invalid("variance must be positive");
          },
          [&](const ExponentialRateFamily&) {
            return (theta.values().array() > 0.0).all() ? ParamVerdict{} : invalid("rate must be positive");
          },
          [&](const GammaScaleFamily&) {
            return theta[0] > 0.0 ? ParamVerdict{} : invalid("scale must be positive");
          },
          [&](const UniformUpperFamily& f) {
            if (theta[0] < 1.0) return invalid("below lower bound 1");
            if (theta[0] > f.cap) return invalid("above upper bound " + detail::compact(f.cap));
            return ParamVerdict{};
          },
      },
      family.variant());
}

double logistic_sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void sample_dataset_into(const FamilySpec& family, const ParamPoint& theta, std::uint64_t n, RandomStream& rng,
                         Dataset& out) {
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "cannot sample an empty dataset (n = 0)");
  if (auto verdict = validate_param(family, theta); !verdict) {
    throw Error(ErrorCode::kParameterDomain, family.label() + ": " + verdict.reason);
  }
  const std::size_t rows = static_cast<std::size_t>(n);
  out.reshape(rows, family.observation_width());

  std::visit(Overloaded{
                 [&](const GaussianMeanFamily& f) {
                   const auto p = f.cholesky.rows();
                   Eigen::VectorXd z(p);
                   for (std::size_t i = 0; i < rows; ++i) {
                     for (Eigen::Index j = 0; j < p; ++j) z(j) = standard_normal(rng);
                     auto row = out.row(i);
                     // x = theta + L z, with L lower triangular.
                     for (Eigen::Index r = 0; r < p; ++r) {
                       double acc = theta.values()(r);
                       for (Eigen::Index c = 0; c <= r; ++c) acc += f.cholesky(r, c) * z(c);
                       row[static_cast<std::size_t>(r)] = acc;
                     }
                   }
                 },
                 [&](const GaussianVarianceFamily& f) {
                   const double sd = std::sqrt(theta[0]);
                   for (std::size_t i = 0; i < rows; ++i) out.row(i)[0] = f.mean + sd * standard_normal(rng);
                 },
                 [&](const ExponentialRateFamily& f) {
                   for (std::size_t i = 0; i < rows; ++i) {
                     auto row = out.row(i);
                     for (std::size_t j = 0; j < f.dim; ++j) row[j] = standard_exponential(rng) / theta[j];
                   }
                 },
                 [&](const GammaScaleFamily& f) {
                   for (std::size_t i = 0; i < rows; ++i) out.row(i)[0] = theta[0] * standard_gamma(f.shape, rng);
                 },
                 [&](const UniformUpperFamily&) {
                   for (std::size_t i = 0; i < rows; ++i) out.row(i)[0] = theta[0] * uniform_open_closed(rng);
                 },
                 [&](const LogisticRegressionFamily& f) {
                   for (std::size_t i = 0; i < rows; ++i) {
                     auto row = out.row(i);
                     double eta = 0.0;
                     for (std::size_t j = 0; j < f.covariate_dim; ++j) {
                       row[j] = standard_normal(rng);
                       eta += theta[j] * row[j];
                     }
                     row[f.covariate_dim] = uniform01(rng) < logistic_sigmoid(eta) ? 1.0 : 0.0;
                   }
                 },
             },
             family.variant());
}

Dataset sample_dataset(const FamilySpec& family, const ParamPoint& theta, std::uint64_t n, RandomStream& rng) {
  Dataset out;
  sample_dataset_into(family, theta, n, rng, out);
  return out;
}

}  // namespace collapse_lab
