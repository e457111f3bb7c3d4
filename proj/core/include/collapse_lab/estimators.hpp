#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "collapse_lab/families.hpp"

namespace collapse_lab {

enum class RateKind {
  kPower,       // r(n) = n^kappa
  kLogSquared,  // r(n) = (log n)^2
};

/// Order of a uniform tail bound P(|est - theta| >= delta) <= C1 exp(-C2 r(n) delta^gamma).
struct RateOrder {
  double kappa = 1.0;
  double gamma = 2.0;
  RateKind rate = RateKind::kPower;
};

struct TailBoundSpec {
  double c1 = 1.0;
  double c2 = 1.0;
  RateOrder order;

  double rate(double n) const;
};

/// Per-coordinate bias |E est_i - theta_i| ~ v_i / n^rho. An empty `rho`
/// marks an unbiased estimator; an empty `v` means the constants have no
/// closed form.
struct BiasSpec {
  std::optional<double> rho;
  Eigen::VectorXd v;

  static BiasSpec unbiased(std::size_t dim) { return {std::nullopt, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))}; }
  static BiasSpec of_order(double rho, Eigen::VectorXd v) { return {rho, std::move(v)}; }
  bool is_unbiased() const noexcept { return !rho.has_value(); }
};

/// Mean of the first `prefix` rows (all rows when prefix == 0).
struct SampleMean {
  std::size_t prefix = 0;
};
/// sum_i w_i x_i with w_i = (1/i) / H_n, in generation order.
struct HarmonicWeightedMean {};
struct MaxObservation {
  double cap = 10.0;
};
struct ExponentialMle {};
struct GammaScaleMle {
  double shape = 2.0;
};
struct VarianceKnownMean {
  double mean = 0.0;
};
/// Sample mean shifted by (b / sqrt(n)) * 1_p.
struct BiasedMean {
  double offset_scale = 1.0;
};
/// Damped Newton / IRLS for the no-intercept logistic model.
struct LogisticMle {
  int max_iter = 100;
  double tol = 1e-8;
};

class EstimatorSpec {
 public:
  using Variant = std::variant<SampleMean, HarmonicWeightedMean, MaxObservation, ExponentialMle, GammaScaleMle,
                               VarianceKnownMean, BiasedMean, LogisticMle>;

  static EstimatorSpec sample_mean(std::size_t dim, std::size_t prefix = 0);
  static EstimatorSpec harmonic_weighted_mean(std::size_t dim = 1);
  static EstimatorSpec max_observation(double cap);
  static EstimatorSpec exponential_mle(std::size_t dim = 1);
  static EstimatorSpec gamma_scale_mle(double shape);
  static EstimatorSpec variance_known_mean(double mean);
  static EstimatorSpec biased_mean(std::size_t dim, double offset_scale = 1.0);
  static EstimatorSpec logistic_mle(std::size_t dim, int max_iter = 100, double tol = 1e-8);

  const Variant& variant() const noexcept { return variant_; }
  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&variant_);
  }

  std::size_t dim() const noexcept { return dim_; }
  /// Tail constants, when the estimator has a published uniform bound.
  const std::optional<TailBoundSpec>& tail() const noexcept { return tail_; }
  const RateOrder& order() const noexcept { return order_; }
  const BiasSpec& bias() const noexcept { return bias_; }

  std::string kind() const;
  std::string label() const;

 private:
  EstimatorSpec(Variant v, std::size_t dim, std::optional<TailBoundSpec> tail, RateOrder order, BiasSpec bias);

  Variant variant_;
  std::size_t dim_;
  std::optional<TailBoundSpec> tail_;
  RateOrder order_;
  BiasSpec bias_;
};

/// Throws kLemmaViolation when a biased estimator declares rho < kappa / gamma.
void check_bias_consistency(const RateOrder& order, const BiasSpec& bias);

/// Applies the estimation scheme to a dataset.
///
/// Errors: kInsufficientData for an empty (or too short) dataset,
/// kDegenerateData when the exponential MLE sees a zero sum, and
/// ConvergenceError when the logistic fit separates or stalls.
ParamPoint estimate(const EstimatorSpec& spec, const Dataset& data);

/// C1 exp(-C2 r(n) delta^gamma), clamped to 1.
/// `n` may be non-integral, e.g. to evaluate a log-rate bound at n = e^10.
double tail_bound(const TailBoundSpec& tail, double n, double delta);
/// Throws kUnsupported when the estimator has no tail constants.
double tail_bound(const EstimatorSpec& spec, std::uint64_t n, double delta);

/// Whether this estimator is meaningful for the family (and matches its metadata).
ParamVerdict check_compatible(const EstimatorSpec& estimator, const FamilySpec& family);

}  // namespace collapse_lab
