#include "collapse_lab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "collapse_lab/error.hpp"
#include "overloaded.hpp"
#include "text.hpp"

namespace collapse_lab {

using detail::Overloaded;

namespace {

// sqrt(n)-consistent estimators without a published uniform bound.
constexpr RateOrder kRootN{1.0, 2.0, RateKind::kPower};

Eigen::VectorXd ones(std::size_t dim) { return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim)); }

void require_rows(const Dataset& data, std::size_t rows) {
  if (data.empty()) throw Error(ErrorCode::kInsufficientData, "estimator needs a non-empty dataset");
  if (data.size() < rows) {
    throw Error(ErrorCode::kInsufficientData,
                "estimator needs at least " + std::to_string(rows) + " rows, got " + std::to_string(data.size()));
  }
}

void require_width(const Dataset& data, std::size_t width, const char* who) {
  if (data.width() != width) {
    throw Error(ErrorCode::kConfiguration, std::string(who) + " expects observations of width " +
                                               std::to_string(width) + ", got " + std::to_string(data.width()));
  }
}

Eigen::VectorXd column_means(const Dataset& data, std::size_t rows) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.width()));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) sum(static_cast<Eigen::Index>(j)) += row[j];
  }
  return sum / static_cast<double>(rows);
}

ParamPoint fit_logistic(const LogisticMle& opts, std::size_t dim, const Dataset& data) {
  require_width(data, dim + 1, "logistic_mle");
  const auto p = static_cast<Eigen::Index>(dim);
  const std::size_t n = data.size();

  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) positives += data.row(i)[dim] > 0.5 ? 1 : 0;
  if (positives == 0 || positives == n) {
    throw ConvergenceError("logistic_mle: complete separation, only one label class present", 0);
  }

  auto log_likelihood = [&](const Eigen::VectorXd& theta) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = data.row(i);
      double eta = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) eta += theta(j) * row[static_cast<std::size_t>(j)];
      // log sigma(eta) = -log1p(exp(-eta)), stable on both sides.
      const double margin = row[dim] > 0.5 ? eta : -eta;
      ll -= margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    }
    return ll;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  double current = log_likelihood(theta);
  Eigen::VectorXd grad(p);
  Eigen::MatrixXd hessian(p, p);
  Eigen::VectorXd x(p);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    grad.setZero();
    hessian.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = data.row(i);
      for (Eigen::Index j = 0; j < p; ++j) x(j) = row[static_cast<std::size_t>(j)];
      const double prob = logistic_sigmoid(theta.dot(x));
      grad.noalias() += (row[dim] - prob) * x;
      hessian.selfadjointView<Eigen::Lower>().rankUpdate(x, prob * (1.0 - prob));
    }
    hessian = hessian.selfadjointView<Eigen::Lower>();
    if (grad.norm() / static_cast<double>(n) < opts.tol) {
      // A finite maximizer cannot classify every row correctly: if it did,
      // scaling it up would raise the likelihood further.
      double min_margin = INFINITY;
      for (std::size_t i = 0; i < n && min_margin > 0.0; ++i) {
        const auto row = data.row(i);
        double eta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) eta += theta(j) * row[static_cast<std::size_t>(j)];
        min_margin = std::min(min_margin, row[dim] > 0.5 ? eta : -eta);
      }
      if (min_margin > 0.0 || current > -1e-8) {
        throw ConvergenceError("logistic_mle: complete separation, likelihood saturated", iter);
      }
      return ParamPoint(theta);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
      throw ConvergenceError("logistic_mle: information matrix is singular", iter);
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    // Near the optimum the predicted gain is below the rounding noise of the
    // log-likelihood, so a line search cannot see it; take the full step.
    if (grad.dot(step) <= 1e-12 * std::max(1.0, std::abs(current))) {
      theta += step;
      current = log_likelihood(theta);
      continue;
    }
    double scale = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
      const Eigen::VectorXd candidate = theta + scale * step;
      const double value = log_likelihood(candidate);
      if (value >= current) {
        theta = candidate;
        current = value;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    if (theta.lpNorm<Eigen::Infinity>() > 1e4) {
      throw ConvergenceError("logistic_mle: complete separation, coefficients diverging", iter);
    }
  }
  throw ConvergenceError("logistic_mle: gradient tolerance not reached", opts.max_iter);
}

}  // namespace

double TailBoundSpec::rate(double n) const {
  if (order.rate == RateKind::kLogSquared) {
    const double l = std::log(n);
    return l * l;
  }
  return std::pow(n, order.kappa);
}

void check_bias_consistency(const RateOrder& order, const BiasSpec& bias) {
  if (!bias.rho) {
    if (!(bias.v.array() == 0.0).all()) {
      throw Error(ErrorCode::kConfiguration, "an unbiased estimator must carry zero bias constants");
    }
    return;
  }
  if (!(*bias.rho > 0.0)) throw Error(ErrorCode::kConfiguration, "bias order rho must be positive");
  if (order.rate == RateKind::kPower && *bias.rho < order.kappa / order.gamma) {
    throw Error(ErrorCode::kLemmaViolation, "bias order rho = " + detail::compact(*bias.rho) +
                                                " is below kappa / gamma = " +
                                                detail::compact(order.kappa / order.gamma));
  }
}

EstimatorSpec::EstimatorSpec(Variant v, std::size_t dim, std::optional<TailBoundSpec> tail, RateOrder order,
                             BiasSpec bias)
    : variant_(std::move(v)), dim_(dim), tail_(tail), order_(order), bias_(std::move(bias)) {
  if (dim_ == 0) throw Error(ErrorCode::kConfiguration, "estimator dimension must be >= 1");
  check_bias_consistency(order_, bias_);
}

EstimatorSpec EstimatorSpec::sample_mean(std::size_t dim, std::size_t prefix) {
  const TailBoundSpec tail{std::exp(static_cast<double>(dim) / 2.0), 0.25, kRootN};
  return {SampleMean{prefix}, dim, tail, kRootN, BiasSpec::unbiased(dim)};
}

EstimatorSpec EstimatorSpec::harmonic_weighted_mean(std::size_t dim) {
  const RateOrder order{2.0, 2.0, RateKind::kLogSquared};
  std::optional<TailBoundSpec> tail;
  if (dim == 1) tail = TailBoundSpec{2.0, 3.0 / (std::numbers::pi * std::numbers::pi), order};
  return {HarmonicWeightedMean{}, dim, tail, order, BiasSpec::unbiased(dim)};
}

EstimatorSpec EstimatorSpec::max_observation(double cap) {
  if (!(cap >= 1.0)) throw Error(ErrorCode::kConfiguration, "max_observation cap must be >= 1");
  const RateOrder order{1.0, 1.0, RateKind::kPower};
  // E max = n theta / (n + 1): bias theta / (n + 1) <= M / n.
  Eigen::VectorXd v(1);
  v << cap;
  return {MaxObservation{cap}, 1, TailBoundSpec{1.0, 1.0 / cap, order}, order, BiasSpec::of_order(1.0, v)};
}

EstimatorSpec EstimatorSpec::exponential_mle(std::size_t dim) {
  // E est - theta = theta / (n - 1); constants reported at unit rate.
  return {ExponentialMle{}, dim, std::nullopt, kRootN, BiasSpec::of_order(1.0, ones(dim))};
}

EstimatorSpec EstimatorSpec::gamma_scale_mle(double shape) {
  if (!(shape > 0.0)) throw Error(ErrorCode::kConfiguration, "gamma_scale_mle shape must be positive");
  return {GammaScaleMle{shape}, 1, std::nullopt, kRootN, BiasSpec::unbiased(1)};
}

EstimatorSpec EstimatorSpec::variance_known_mean(double mean) {
  return {VarianceKnownMean{mean}, 1, std::nullopt, kRootN, BiasSpec::unbiased(1)};
}

EstimatorSpec EstimatorSpec::biased_mean(std::size_t dim, double offset_scale) {
  if (!(offset_scale >= 0.0)) throw Error(ErrorCode::kConfiguration, "biased_mean offset scale must be >= 0");
  BiasSpec bias = offset_scale == 0.0 ? BiasSpec::unbiased(dim) : BiasSpec::of_order(0.5, offset_scale * ones(dim));
  return {BiasedMean{offset_scale}, dim, std::nullopt, kRootN, std::move(bias)};
}

EstimatorSpec EstimatorSpec::logistic_mle(std::size_t dim, int max_iter, double tol) {
  if (max_iter < 1 || !(tol > 0.0)) throw Error(ErrorCode::kConfiguration, "logistic_mle needs max_iter >= 1, tol > 0");
  return {LogisticMle{max_iter, tol}, dim, std::nullopt, kRootN, BiasSpec::of_order(1.0, Eigen::VectorXd())};
}

std::string EstimatorSpec::kind() const {
  return std::visit(Overloaded{
                        [](const SampleMean&) { return std::string("sample_mean"); },
                        [](const HarmonicWeightedMean&) { return std::string("harmonic_mean"); },
                        [](const MaxObservation&) { return std::string("max_observation"); },
                        [](const ExponentialMle&) { return std::string("exp_mle"); },
                        [](const GammaScaleMle&) { return std::string("gamma_mle"); },
                        [](const VarianceKnownMean&) { return std::string("variance_known_mean"); },
                        [](const BiasedMean&) { return std::string("biased_mean"); },
                        [](const LogisticMle&) { return std::string("logistic_mle"); },
                    },
                    variant_);
}

std::string EstimatorSpec::label() const {
  if (const auto* m = get_if<SampleMean>(); m && m->prefix > 0) {
    return "sample_mean(first=" + std::to_string(m->prefix) + ")";
  }
  if (const auto* b = get_if<BiasedMean>()) return "biased_mean(b=" + detail::compact(b->offset_scale) + ")";
  return kind();
}

ParamPoint estimate(const EstimatorSpec& spec, const Dataset& data) {
  require_rows(data, 1);
  const std::size_t n = data.size();
  return std::visit(
      Overloaded{
          [&](const SampleMean& m) {
            require_width(data, spec.dim(), "sample_mean");
            const std::size_t rows = m.prefix == 0 ? n : m.prefix;
            require_rows(data, rows);
            return ParamPoint(column_means(data, rows));
          },
          [&](const HarmonicWeightedMean&) {
            require_width(data, spec.dim(), "harmonic_mean");
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.width()));
            double harmonic = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              const double w = 1.0 / static_cast<double>(i + 1);
              harmonic += w;
              const auto row = data.row(i);
              for (std::size_t j = 0; j < row.size(); ++j) acc(static_cast<Eigen::Index>(j)) += w * row[j];
            }
            return ParamPoint(acc / harmonic);
          },
          [&](const MaxObservation&) {
            require_width(data, 1, "max_observation");
            const auto values = data.values();
            return ParamPoint::scalar(*std::max_element(values.begin(), values.end()));
          },
          [&](const ExponentialMle&) {
            require_width(data, spec.dim(), "exp_mle");
            Eigen::VectorXd sums = column_means(data, n) * static_cast<double>(n);
            if (!(sums.array() > 0.0).all()) {
              throw Error(ErrorCode::kDegenerateData, "exp_mle: a coordinate has non-positive sum");
            }
            return ParamPoint(static_cast<double>(n) * sums.cwiseInverse());
          },
          [&](const GammaScaleMle& g) {
            require_width(data, 1, "gamma_mle");
            return ParamPoint::scalar(column_means(data, n)(0) / g.shape);
          },
          [&](const VarianceKnownMean& v) {
            require_width(data, 1, "variance_known_mean");
            double sum = 0.0;
            for (double x : data.values()) sum += (x - v.mean) * (x - v.mean);
            return ParamPoint::scalar(sum / static_cast<double>(n));
          },
          [&](const BiasedMean& b) {
            require_width(data, spec.dim(), "biased_mean");
            const double shift = b.offset_scale / std::sqrt(static_cast<double>(n));
            return ParamPoint((column_means(data, n).array() + shift).matrix());
          },
          [&](const LogisticMle& l) { return fit_logistic(l, spec.dim(), data); },
      },
      spec.variant());
}

double tail_bound(const TailBoundSpec& tail, double n, double delta) {
  if (!(n >= 1.0)) throw Error(ErrorCode::kIndex, "tail_bound requires n >= 1");
  if (!(delta > 0.0)) throw Error(ErrorCode::kParameterDomain, "tail_bound requires delta > 0");
  const double bound =
      tail.c1 * std::exp(-tail.c2 * tail.rate(n) * std::pow(delta, tail.order.gamma));
  return std::min(bound, 1.0);
}

double tail_bound(const EstimatorSpec& spec, std::uint64_t n, double delta) {
  if (!spec.tail()) {
    throw Error(ErrorCode::kUnsupported, spec.label() + " has no published uniform tail constants");
  }
  if (n == 0) throw Error(ErrorCode::kIndex, "tail_bound requires n >= 1");
  return tail_bound(*spec.tail(), static_cast<double>(n), delta);
}

ParamVerdict check_compatible(const EstimatorSpec& estimator, const FamilySpec& family) {
  auto reject = [&](const std::string& why) {
    return ParamVerdict{false, estimator.label() + " is not valid for " + family.label() + ": " + why};
  };
  if (estimator.dim() != family.param_dim()) return reject("dimension mismatch");
  return std::visit(
      Overloaded{
          [&](const SampleMean&) {
            return family.get_if<GaussianMeanFamily>() ? ParamVerdict{} : reject("needs a gaussian_mean family");
          },
          [&](const HarmonicWeightedMean&) {
            return family.get_if<GaussianMeanFamily>() ? ParamVerdict{} : reject("needs a gaussian_mean family");
          },
          [&](const BiasedMean&) {
            return family.get_if<GaussianMeanFamily>() ? ParamVerdict{} : reject("needs a gaussian_mean family");
          },
          [&](const MaxObservation& m) {
            const auto* f = family.get_if<UniformUpperFamily>();
            if (!f) return reject("needs a uniform_upper family");
            return f->cap == m.cap ? ParamVerdict{} : reject("cap differs from the family's");
          },
          [&](const ExponentialMle&) {
            return family.get_if<ExponentialRateFamily>() ? ParamVerdict{} : reject("needs an exponential family");
          },
          [&](const GammaScaleMle& g) {
            const auto* f = family.get_if<GammaScaleFamily>();
            if (!f) return reject("needs a gamma_scale family");
            return f->shape == g.shape ? ParamVerdict{} : reject("shape differs from the family's");
          },
          [&](const VarianceKnownMean& v) {
            const auto* f = family.get_if<GaussianVarianceFamily>();
            if (!f) return reject("needs a gaussian_variance family");
            return f->mean == v.mean ? ParamVerdict{} : reject("known mean differs from the family's");
          },
          [&](const LogisticMle&) {
            return family.get_if<LogisticRegressionFamily>() ? ParamVerdict{} : reject("needs a logistic family");
          },
      },
      estimator.variant());
}

}  // namespace collapse_lab
