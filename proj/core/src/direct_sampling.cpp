#include "collapse_lab/direct_sampling.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/trigamma.hpp>

#include "collapse_lab/error.hpp"
#include "collapse_lab/special_functions.hpp"

namespace collapse_lab {

namespace {

Eigen::VectorXd correlated_normal(const GaussianMeanFamily& f, RandomStream& rng) {
  Eigen::VectorXd z(f.cholesky.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
  return f.cholesky.triangularView<Eigen::Lower>() * z;
}

// sum_i w_i^2 for the harmonic weights w_i = (1/i) / H_n.
double harmonic_weight_energy(std::uint64_t n) {
  const double x = static_cast<double>(n) + 1.0;
  const double h1 = digamma(x) + std::numbers::egamma;
  const double h2 = std::numbers::pi * std::numbers::pi / 6.0 - boost::math::trigamma(x);
  return h2 / (h1 * h1);
}

}  // namespace

bool has_direct_sampler(const FamilySpec& family, const EstimatorSpec& estimator) {
  return check_compatible(estimator, family).valid && !estimator.get_if<LogisticMle>();
}

ParamPoint sample_estimate(const FamilySpec& family, const EstimatorSpec& estimator, const ParamPoint& theta,
                           std::uint64_t n, RandomStream& rng) {
  if (!has_direct_sampler(family, estimator)) {
    throw Error(ErrorCode::kUnsupported,
                "no direct sampler for " + estimator.label() + " on " + family.label());
  }
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "sample size must be >= 1");
  if (const auto verdict = validate_param(family, theta); !verdict) {
    throw Error(ErrorCode::kParameterDomain, family.label() + ": " + verdict.reason);
  }
  const double nd = static_cast<double>(n);

  if (const auto* g = family.get_if<GaussianMeanFamily>()) {
    if (const auto* m = estimator.get_if<SampleMean>()) {
      if (m->prefix > n) throw Error(ErrorCode::kInsufficientData, "sample_mean prefix exceeds the dataset size");
      const double rows = m->prefix == 0 ? nd : static_cast<double>(m->prefix);
      return ParamPoint(theta.values() + correlated_normal(*g, rng) / std::sqrt(rows));
    }
    if (const auto* b = estimator.get_if<BiasedMean>()) {
      const double scale = 1.0 / std::sqrt(nd);
      return ParamPoint(((theta.values() + scale * correlated_normal(*g, rng)).array() + b->offset_scale * scale).matrix());
    }
    return ParamPoint(theta.values() + std::sqrt(harmonic_weight_energy(n)) * correlated_normal(*g, rng));
  }
  if (family.get_if<ExponentialRateFamily>()) {
    Eigen::VectorXd out(theta.values().size());
    for (Eigen::Index j = 0; j < out.size(); ++j) out(j) = nd * theta.values()(j) / standard_gamma(nd, rng);
    return ParamPoint(std::move(out));
  }
  if (const auto* g = family.get_if<GammaScaleFamily>()) {
    const double shape = nd * g->shape;
    return ParamPoint::scalar(theta[0] * standard_gamma(shape, rng) / shape);
  }
  if (family.get_if<GaussianVarianceFamily>()) {
    return ParamPoint::scalar(theta[0] * 2.0 * standard_gamma(nd / 2.0, rng) / nd);
  }
  // Uniform upper end: the maximum of n uniforms on (0, theta] is theta U^(1/n).
  return ParamPoint::scalar(theta[0] * std::exp(std::log(uniform_open_closed(rng)) / nd));
}

}  // namespace collapse_lab
