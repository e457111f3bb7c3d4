#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "collapse_lab/estimators.hpp"
#include "collapse_lab/families.hpp"
#include "collapse_lab/random.hpp"
#include "collapse_lab/schedules.hpp"

namespace collapse_lab {

/// Per-coordinate E(theta_T - theta*)^2 of the recursive Gaussian mean
/// chain: (1 + v(T)) / n0. T = kUnboundedHorizon uses the limit of v and
/// reports divergence.
SeriesValue gaussian_mean_mse(std::uint64_t n0, const ScheduleSpec& schedule, std::uint64_t T);

/// [(1 + 2/n)^T - 1] sigma^4 for the known-mean variance chain, in log space.
double variance_chain_risk(std::uint64_t n, std::uint64_t T, double sigma_sq);

/// log(n/2) - psi(n/2): per-step downward drift of log sigma_t^2.
double variance_chain_log_drift(std::uint64_t n);

struct ImprovementEstimate {
  double value = 0.5;
  double half_width = 0.0;
  std::uint64_t draws = 0;
  Eigen::MatrixXd covariance;
  double v = 0.0;
};

/// P(T) = E[Phi(-||X|| / (2 ||S^{1/2} X / ||X|| ||))] with X ~ N(0, v S), by
/// Monte Carlo over `draws` samples of X. v = 0 gives exactly 1/2.
/// Throws kFactorization when S is not positive definite.
ImprovementEstimate improvement_probability(const Eigen::MatrixXd& covariance, double v, std::uint64_t draws,
                                            RandomStream& rng);

/// Eigenvalue brackets computed on the same draws as the estimate.
/// With d = ||S^{1/2} X~|| in [sqrt(l_min), sqrt(l_max)], the tight bracket
/// uses E[Phi(-||X|| / (2 sqrt(l)))]; the wider bracket uses l itself.
struct ImprovementBracket {
  ImprovementEstimate estimate;
  double lower_root = 0.5;        // l_min^{1/2}
  double upper_root = 0.5;        // l_max^{1/2}
  double lower_eigenvalue = 0.5;  // l_min
  double upper_eigenvalue = 0.5;  // l_max
};

ImprovementBracket improvement_probability_bracketed(const Eigen::MatrixXd& covariance, double v,
                                                    std::uint64_t draws, RandomStream& rng);

struct IdentityBounds {
  double lower = 0.5;
  /// Clamped to 1; empty for p = 1 where the formula needs Gamma(0).
  std::optional<double> upper;
  /// Unclamped upper formula (NaN for p = 1).
  double upper_raw = 0.0;
  bool partial = false;
};

/// Bracket on P(T) for S = I_p: lower Phi(-sqrt(v p) / 2) and the
/// Gamma-function upper formula.
IdentityBounds improvement_bounds_identity(double v, std::uint64_t p);

struct UnionBound {
  double value = 1.0;
  bool divergent = false;
  /// The summed bound reached 1 and carries no information.
  bool vacuous = false;
  std::uint64_t terms = 0;
  /// Normalizer C(s) of the delta partition.
  double partition_norm = 0.0;
};

/// C1 sum_{t=1}^{T} exp(-C2 (c_{t-1} n0)^kappa delta_t^gamma) with
/// delta_t = (delta / (2 C(s))) (log(t+1))^{1/gamma} / t^{1+s} and c_0 = 1.
/// T = kUnboundedHorizon sums until the remaining tail is below 1e-12.
/// Throws kUnsupported for logarithmic rates.
UnionBound union_tail_bound(const TailBoundSpec& tail, const ScheduleSpec& schedule, std::uint64_t n0, double delta,
                            double s, std::uint64_t T);

/// min(1, e^p exp(-n0 delta^2 / sum_{t<T} 1/c_t)) with c_0 = 1.
double sharp_gaussian_bound(std::uint64_t n0, const ScheduleSpec& schedule, std::uint64_t T, double delta,
                            std::uint64_t p);

enum class CovarianceSource { kClosedForm, kMonteCarlo };

/// Covariance of the limiting normal law of sqrt(n)(theta_hat - theta), i.e.
/// the inverse Fisher information.
struct AsymptoticCovariance {
  Eigen::MatrixXd matrix;
  CovarianceSource source = CovarianceSource::kClosedForm;
  std::uint64_t draws = 0;
};

/// Gaussian mean: S. Exponential rates: diag(theta^2). Logistic: inverse of
/// the Monte Carlo average of s(1 - s) x x' over `draws` covariates.
/// Throws kConditioning (with the smallest eigenvalue) for a singular
/// information matrix and kUnsupported for other families.
AsymptoticCovariance asymptotic_covariance(const FamilySpec& family, const ParamPoint& theta, std::uint64_t draws,
                                           RandomStream& rng);

/// improvement_probability with S = asymptotic covariance at theta* and
/// v = inverse_coefficient_sum(schedule, T).
ImprovementEstimate improvement_probability_asymptotic(const FamilySpec& family, const ParamPoint& theta_star,
                                                       const ScheduleSpec& schedule, std::uint64_t T,
                                                       std::uint64_t draws, RandomStream& rng);

}  // namespace collapse_lab
