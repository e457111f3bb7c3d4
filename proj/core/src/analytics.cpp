#include "collapse_lab/analytics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/gamma.hpp>

#include "collapse_lab/error.hpp"
#include "collapse_lab/special_functions.hpp"
#include "overloaded.hpp"
#include "text.hpp"

namespace collapse_lab {

using detail::Overloaded;

namespace {

constexpr double kZ95 = 1.96;

struct RunningMean {
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  double mean(std::uint64_t n) const { return sum / static_cast<double>(n); }
  double half_width(std::uint64_t n) const {
    if (n < 2) return 0.0;
    const double count = static_cast<double>(n);
    const double m = sum / count;
    return kZ95 * std::sqrt(std::max(0.0, (sum_sq - count * m * m) / (count - 1.0)) / count);
  }
};

Eigen::MatrixXd checked_cholesky(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() == 0 || covariance.rows() != covariance.cols() ||
      !covariance.isApprox(covariance.transpose(), 1e-12)) {
    throw Error(ErrorCode::kFactorization, "covariance must be a non-empty symmetric matrix");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kFactorization, "covariance is not positive definite");
  return llt.matrixL();
}

// log c_{t-1} with c_0 = 1, without forming c itself.
double log_previous_coefficient(const ScheduleSpec& schedule, std::uint64_t t) {
  if (t == 1) return 0.0;
  const double prev = static_cast<double>(t - 1);
  return std::visit(Overloaded{
                        [](const ConstantSchedule& c) { return std::log(c.c); },
                        [&](const PolynomialSchedule& p) { return p.a * std::log(prev); },
                        [&](const GeometricSchedule& g) { return prev * std::log(g.b); },
                        [&](const ExplicitSchedule&) { return std::log(coefficient(schedule, t - 1)); },
                    },
                    schedule.variant());
}

// C(s) = sum_{t>=1} (log(t+1))^{1/gamma} / t^{1+s}.
double partition_norm(double s, double gamma) {
  constexpr std::uint64_t kTerms = 1'000'000;
  const double root = 1.0 / gamma;
  double sum = 0.0;
  for (std::uint64_t t = kTerms; t >= 1; --t) {
    const double x = static_cast<double>(t);
    sum += std::pow(std::log1p(x), root) * std::pow(x, -1.0 - s);
  }
  // Tail as the integral of (log x)^{1/gamma} x^{-1-s} from N to infinity.
  const double N = static_cast<double>(kTerms) + 0.5;
  return sum + std::pow(s, -1.0 - root) * boost::math::tgamma(1.0 + root, s * std::log(N));
}

void require_draws(std::uint64_t draws) {
  if (draws == 0) throw Error(ErrorCode::kConfiguration, "Monte Carlo draw count must be >= 1");
}

}  // namespace

SeriesValue gaussian_mean_mse(std::uint64_t n0, const ScheduleSpec& schedule, std::uint64_t T) {
  if (n0 == 0) throw Error(ErrorCode::kConfiguration, "n0 must be >= 1");
  const SeriesValue v =
      T == kUnboundedHorizon ? inverse_coefficient_sum_limit(schedule) : SeriesValue{inverse_coefficient_sum(schedule, T)};
  if (v.divergent) return {INFINITY, true};
  return {(1.0 + v.value) / static_cast<double>(n0), false};
}

double variance_chain_risk(std::uint64_t n, std::uint64_t T, double sigma_sq) {
  if (n < 2) throw Error(ErrorCode::kParameterDomain, "variance chain risk needs n >= 2");
  if (!(sigma_sq > 0.0)) throw Error(ErrorCode::kParameterDomain, "sigma^2 must be positive");
  const double growth = std::expm1(static_cast<double>(T) * std::log1p(2.0 / static_cast<double>(n)));
  return growth * sigma_sq * sigma_sq;
}

double variance_chain_log_drift(std::uint64_t n) {
  if (n < 2) throw Error(ErrorCode::kParameterDomain, "variance chain drift needs n >= 2");
  const double x = static_cast<double>(n) / 2.0;
  if (x < 10.0) return std::log(x) - digamma(x);
  // log x - psi(x) by its asymptotic series, avoiding the cancellation.
  const double r = 1.0 / (x * x);
  return 0.5 / x + r * (1.0 / 12.0 - r * (1.0 / 120.0 - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
}

ImprovementBracket improvement_probability_bracketed(const Eigen::MatrixXd& covariance, double v,
                                                    std::uint64_t draws, RandomStream& rng) {
  const Eigen::MatrixXd L = checked_cholesky(covariance);
  if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kParameterDomain, "v must be finite and >= 0");
  require_draws(draws);

  ImprovementBracket out;
  out.estimate.covariance = covariance;
  out.estimate.v = v;
  if (v == 0.0) return out;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
  const double l_min = eig.eigenvalues().minCoeff();
  const double l_max = eig.eigenvalues().maxCoeff();
  const double scale = std::sqrt(v);

  RunningMean p, lo_root, hi_root, lo_eig, hi_eig;
  Eigen::VectorXd z(L.rows());
  for (std::uint64_t i = 0; i < draws; ++i) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = standard_normal(rng);
    Eigen::VectorXd x = L.triangularView<Eigen::Lower>() * z;
    x *= scale;
    const double norm = x.norm();
    if (norm == 0.0) {
      p.add(0.5), lo_root.add(0.5), hi_root.add(0.5), lo_eig.add(0.5), hi_eig.add(0.5);
      continue;
    }
    // ||S^{1/2} u||^2 = u' S u for the unit direction u = x / ||x||.
    const double spread = std::sqrt(x.dot(covariance * x)) / norm;
    p.add(normal_cdf(-norm / (2.0 * spread)));
    lo_root.add(normal_cdf(-norm / (2.0 * std::sqrt(l_min))));
    hi_root.add(normal_cdf(-norm / (2.0 * std::sqrt(l_max))));
    lo_eig.add(normal_cdf(-norm / (2.0 * l_min)));
    hi_eig.add(normal_cdf(-norm / (2.0 * l_max)));
  }
  out.estimate.value = p.mean(draws);
  out.estimate.half_width = p.half_width(draws);
  out.estimate.draws = draws;
  out.lower_root = lo_root.mean(draws);
  out.upper_root = hi_root.mean(draws);
  out.lower_eigenvalue = lo_eig.mean(draws);
  out.upper_eigenvalue = hi_eig.mean(draws);
  return out;
}

ImprovementEstimate improvement_probability(const Eigen::MatrixXd& covariance, double v, std::uint64_t draws,
                                            RandomStream& rng) {
  return improvement_probability_bracketed(covariance, v, draws, rng).estimate;
}

IdentityBounds improvement_bounds_identity(double v, std::uint64_t p) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kParameterDomain, "v must be positive and finite");
  if (p == 0) throw Error(ErrorCode::kParameterDomain, "dimension p must be >= 1");
  IdentityBounds out;
  const double pd = static_cast<double>(p);
  out.lower = normal_cdf(-std::sqrt(v * pd) / 2.0);
  if (p == 1) {
    out.partial = true;
    out.upper_raw = std::nan("");
    return out;
  }
  const double half = (pd - 1.0) / 2.0;
  const double log_upper = 0.5 * std::log(std::numbers::pi) + std::lgamma(half) - half * std::log(2.0) -
                           (pd / 2.0) * std::log(v) - std::lgamma(pd / 2.0) + half * std::log(8.0 * v / (v + 4.0));
  out.upper_raw = std::exp(log_upper);
  out.upper = std::min(1.0, out.upper_raw);
  return out;
}

UnionBound union_tail_bound(const TailBoundSpec& tail, const ScheduleSpec& schedule, std::uint64_t n0, double delta,
                            double s, std::uint64_t T) {
  if (tail.order.rate != RateKind::kPower) {
    throw Error(ErrorCode::kUnsupported, "the union bound needs a polynomial rate n^kappa");
  }
  if (n0 == 0 || T == 0) throw Error(ErrorCode::kConfiguration, "n0 and T must be >= 1");
  if (!(delta > 0.0) || !(s > 0.0)) throw Error(ErrorCode::kParameterDomain, "delta and s must be positive");
  const bool unbounded = T == kUnboundedHorizon;
  const double kappa = tail.order.kappa;
  const double gamma = tail.order.gamma;

  UnionBound out;
  out.partition_norm = partition_norm(s, gamma);
  // term_t = exp(-C2 (c_{t-1} n0)^kappa delta_t^gamma) = (t+1)^{-B_t} with
  // B_t = K c_{t-1}^kappa / t^{gamma(1+s)}.
  const double log_k = std::log(tail.c2) + kappa * std::log(static_cast<double>(n0)) +
                       gamma * std::log(delta / (2.0 * out.partition_norm));
  const double decay = gamma * (1.0 + s);

  if (unbounded) {
    const bool diverges = std::visit(
        Overloaded{
            [](const ConstantSchedule&) { return true; },
            [&](const PolynomialSchedule& p) {
              const double growth = p.a * kappa;
              if (growth != decay) return growth < decay;
              return log_k <= 0.0;  // B_t -> K
            },
            [](const GeometricSchedule&) { return false; },
            [](const ExplicitSchedule&) -> bool {
              throw Error(ErrorCode::kConfiguration, "explicit schedules have no infinite-horizon limit");
            },
        },
        schedule.variant());
    if (diverges) {
      out.divergent = true;
      out.vacuous = true;
      return out;
    }
  }

  constexpr std::uint64_t kMaxTerms = 50'000'000;
  const double budget = 1.0 / tail.c1;
  double sum = 0.0;
  double previous_b = 0.0;
  std::uint64_t t = 1;
  for (; t <= T; ++t) {
    const double x = static_cast<double>(t);
    const double b = std::exp(log_k + kappa * log_previous_coefficient(schedule, t) - decay * std::log(x));
    const double term = std::exp(-b * std::log1p(x));
    sum += term;
    if (sum >= budget) {
      out.terms = t;
      out.vacuous = true;
      return out;
    }
    // While B is rising past 1, the rest of the series is at most
    // term_t (t+1) / (B_t - 1).
    const bool rising = t >= 2 && b >= previous_b;
    previous_b = b;
    const double remainder = b > 1.0 ? term * (x + 1.0) / (b - 1.0) : INFINITY;
    if (rising && remainder < 1e-13) break;
    if (t >= kMaxTerms) {
      if (!std::isfinite(remainder)) {
        out.divergent = unbounded;
        out.vacuous = true;
        out.terms = t;
        return out;
      }
      sum += remainder;
      break;
    }
  }
  out.terms = std::min(t, T);
  out.value = std::min(1.0, tail.c1 * sum);
  out.vacuous = out.value >= 1.0;
  return out;
}

double sharp_gaussian_bound(std::uint64_t n0, const ScheduleSpec& schedule, std::uint64_t T, double delta,
                            std::uint64_t p) {
  if (n0 == 0 || p == 0) throw Error(ErrorCode::kConfiguration, "n0 and p must be >= 1");
  if (!(delta >= 0.0)) throw Error(ErrorCode::kParameterDomain, "delta must be >= 0");
  const SeriesValue v =
      T == kUnboundedHorizon ? inverse_coefficient_sum_limit(schedule) : SeriesValue{inverse_coefficient_sum(schedule, T)};
  if (v.divergent) return 1.0;
  const double exponent = static_cast<double>(p) - static_cast<double>(n0) * delta * delta / (1.0 + v.value);
  return std::exp(std::min(0.0, exponent));
}

AsymptoticCovariance asymptotic_covariance(const FamilySpec& family, const ParamPoint& theta, std::uint64_t draws,
                                           RandomStream& rng) {
  if (auto verdict = validate_param(family, theta); !verdict) {
    throw Error(ErrorCode::kParameterDomain, family.label() + ": " + verdict.reason);
  }
  if (const auto* g = family.get_if<GaussianMeanFamily>()) return {g->covariance, CovarianceSource::kClosedForm, 0};
  if (family.get_if<ExponentialRateFamily>()) {
    return {theta.values().array().square().matrix().asDiagonal(), CovarianceSource::kClosedForm, 0};
  }
  if (family.get_if<LogisticRegressionFamily>()) {
    require_draws(draws);
    const auto d = static_cast<Eigen::Index>(theta.dim());
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd x(d);
    for (std::uint64_t i = 0; i < draws; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) x(j) = standard_normal(rng);
      const double prob = logistic_sigmoid(theta.values().dot(x));
      info.selfadjointView<Eigen::Lower>().rankUpdate(x, prob * (1.0 - prob));
    }
    info = Eigen::MatrixXd(info.selfadjointView<Eigen::Lower>()) / static_cast<double>(draws);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    const double smallest = eig.eigenvalues().minCoeff();
    if (!(smallest > 1e-12 * eig.eigenvalues().maxCoeff())) {
      throw Error(ErrorCode::kConditioning,
                  "Fisher information is singular (smallest eigenvalue " + detail::compact(smallest) + ")");
    }
    Eigen::MatrixXd inverse = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                              eig.eigenvectors().transpose();
    return {0.5 * (inverse + inverse.transpose()), CovarianceSource::kMonteCarlo, draws};
  }
  throw Error(ErrorCode::kUnsupported, "no asymptotic covariance for " + family.label());
}

ImprovementEstimate improvement_probability_asymptotic(const FamilySpec& family, const ParamPoint& theta_star,
                                                       const ScheduleSpec& schedule, std::uint64_t T,
                                                       std::uint64_t draws, RandomStream& rng) {
  const AsymptoticCovariance cov = asymptotic_covariance(family, theta_star, draws, rng);
  const SeriesValue v =
      T == kUnboundedHorizon ? inverse_coefficient_sum_limit(schedule) : SeriesValue{inverse_coefficient_sum(schedule, T)};
  if (v.divergent) throw Error(ErrorCode::kUnsupported, "v(T) diverges for " + schedule.label());
  return improvement_probability(cov.matrix, v.value, draws, rng);
}

}  // namespace collapse_lab
