#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "collapse_lab/estimators.hpp"

namespace collapse_lab {

/// Horizon value standing for T -> infinity in the series queries.
inline constexpr std::uint64_t kUnboundedHorizon = std::numeric_limits<std::uint64_t>::max();

struct ConstantSchedule {
  double c = 1.0;
};
/// c_t = t^a.
struct PolynomialSchedule {
  double a = 1.0;
};
/// c_t = b^t.
struct GeometricSchedule {
  double b = 2.0;
};
/// c_t = coefficients[t - 1].
struct ExplicitSchedule {
  std::vector<double> coefficients;
};

/// Sample-size schedule n_t = ceil(c_t * n0) for training steps t >= 1.
class ScheduleSpec {
 public:
  using Variant = std::variant<ConstantSchedule, PolynomialSchedule, GeometricSchedule, ExplicitSchedule>;

  // Each factory throws kConfiguration when c_t >= 1 cannot hold.
  static ScheduleSpec constant(double c = 1.0);
  static ScheduleSpec polynomial(double a);
  static ScheduleSpec geometric(double b);
  static ScheduleSpec explicit_coefficients(std::vector<double> coefficients);

  const Variant& variant() const noexcept { return variant_; }
  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&variant_);
  }

  std::string kind() const;
  /// "constant(c=1)", "polynomial(a=1.1)", ...
  std::string label() const;

 private:
  explicit ScheduleSpec(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

/// c_t for t >= 1. Throws kIndex for t == 0 and kConfiguration when an
/// explicit schedule is shorter than t.
double coefficient(const ScheduleSpec& schedule, std::uint64_t t);

/// ceil(c_t * n0). Products within 1e-9 relative of an integer snap to it, so
/// 4^1.5 * 100 is 800 rather than 801. Throws kScheduleOverflow naming t.
std::uint64_t sample_size(const ScheduleSpec& schedule, std::uint64_t t, std::uint64_t n0);

/// Value of a series that may diverge as T -> infinity.
struct SeriesValue {
  double value = 0.0;
  bool divergent = false;
};

/// v(T) = sum_{t=1}^{T-1} 1 / c_t; zero for T = 1.
double inverse_coefficient_sum(const ScheduleSpec& schedule, std::uint64_t T);
/// lim v(T). Throws kConfiguration for explicit schedules.
SeriesValue inverse_coefficient_sum_limit(const ScheduleSpec& schedule);

/// r_T = sum_{t<T} c_t^{-1/2} / sqrt(sum_{t<T} c_t^{-1}) with c_0 = 1.
double drift_ratio(const ScheduleSpec& schedule, std::uint64_t T);
SeriesValue drift_ratio_limit(const ScheduleSpec& schedule);

enum class CollapseRegime {
  kMartingale,  // unbiased increments
  kSmallBias,   // rho >= 1
  kLargeBias,   // kappa / gamma <= rho < 1
  kUnionBound,  // generic tail-bound argument
};

std::string to_string(CollapseRegime regime);

/// Polynomial schedules t^a with a > `exponent` avoid collapse. Only the
/// exponent is determined; the multiplicative constant is not.
struct CollapseThreshold {
  CollapseRegime regime;
  double exponent;
};

/// Depends only on (kappa, gamma, rho). Throws kLemmaViolation when
/// rho < kappa / gamma and kUnsupported for logarithmic rates.
CollapseThreshold collapse_threshold(const RateOrder& order, const BiasSpec& bias);
CollapseThreshold collapse_threshold(const TailBoundSpec& tail, const BiasSpec& bias);

}  // namespace collapse_lab
