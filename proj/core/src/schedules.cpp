#include "collapse_lab/schedules.hpp"

#include <cmath>

#include "collapse_lab/error.hpp"
#include "collapse_lab/special_functions.hpp"
#include "overloaded.hpp"
#include "text.hpp"

namespace collapse_lab {

using detail::Overloaded;

namespace {

constexpr std::uint64_t kDirectTerms = 1'000'000;

// sum_{t=first}^{last} t^-s, exact up to kDirectTerms terms and
// Euler-Maclaurin beyond that.
double power_range_sum(double s, std::uint64_t first, std::uint64_t last) {
  if (first > last) return 0.0;
  double sum = 0.0;
  const std::uint64_t direct_end = std::min(last, first + kDirectTerms - 1);
  for (std::uint64_t t = direct_end; t >= first; --t) sum += std::pow(static_cast<double>(t), -s);
  if (direct_end == last) return sum;

  const double a = static_cast<double>(direct_end + 1);
  const double b = static_cast<double>(last);
  const auto f = [s](double x) { return std::pow(x, -s); };
  const auto df = [s](double x) { return -s * std::pow(x, -s - 1.0); };
  const double integral = s == 1.0 ? std::log(b / a) : (std::pow(b, 1.0 - s) - std::pow(a, 1.0 - s)) / (1.0 - s);
  return sum + integral + 0.5 * (f(a) + f(b)) + (df(b) - df(a)) / 12.0;
}

// sum_{t=1}^{last} ratio^t for 0 < ratio < 1.
double geometric_range_sum(double ratio, std::uint64_t last) {
  if (last == 0) return 0.0;
  const double n = static_cast<double>(last);
  return ratio * -std::expm1(n * std::log(ratio)) / (1.0 - ratio);
}

const std::vector<double>& explicit_prefix(const ExplicitSchedule& e, std::uint64_t last) {
  if (last > e.coefficients.size()) {
    throw Error(ErrorCode::kConfiguration, "explicit schedule has " + std::to_string(e.coefficients.size()) +
                                               " coefficients but step " + std::to_string(last) +
                                               " was requested");
  }
  return e.coefficients;
}

// sum_{t=1}^{last} c_t^{-power}; power is 1 or 1/2.
double coefficient_power_sum(const ScheduleSpec& schedule, std::uint64_t last, double power) {
  return std::visit(Overloaded{
                        [&](const ConstantSchedule& c) { return static_cast<double>(last) * std::pow(c.c, -power); },
                        [&](const PolynomialSchedule& p) { return power_range_sum(p.a * power, 1, last); },
                        [&](const GeometricSchedule& g) { return geometric_range_sum(std::pow(g.b, -power), last); },
                        [&](const ExplicitSchedule& e) {
                          const auto& c = explicit_prefix(e, last);
                          double sum = 0.0;
                          for (std::uint64_t t = 0; t < last; ++t) sum += std::pow(c[t], -power);
                          return sum;
                        },
                    },
                    schedule.variant());
}

void require_horizon(std::uint64_t T) {
  if (T == 0) throw Error(ErrorCode::kIndex, "horizon T must be >= 1");
  if (T == kUnboundedHorizon) {
    throw Error(ErrorCode::kConfiguration, "use the limit query for an unbounded horizon");
  }
}

}  // namespace

ScheduleSpec ScheduleSpec::constant(double c) {
  if (!std::isfinite(c) || c < 1.0) throw Error(ErrorCode::kConfiguration, "constant schedule needs c >= 1");
  return ScheduleSpec(ConstantSchedule{c});
}

ScheduleSpec ScheduleSpec::polynomial(double a) {
  if (!std::isfinite(a) || a <= 0.0) throw Error(ErrorCode::kConfiguration, "polynomial schedule needs a > 0");
  return ScheduleSpec(PolynomialSchedule{a});
}

ScheduleSpec ScheduleSpec::geometric(double b) {
  if (!std::isfinite(b) || b <= 1.0) throw Error(ErrorCode::kConfiguration, "geometric schedule needs b > 1");
  return ScheduleSpec(GeometricSchedule{b});
}

ScheduleSpec ScheduleSpec::explicit_coefficients(std::vector<double> coefficients) {
  if (coefficients.empty()) throw Error(ErrorCode::kConfiguration, "explicit schedule needs at least one coefficient");
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    if (!std::isfinite(coefficients[i]) || coefficients[i] < 1.0) {
      throw Error(ErrorCode::kConfiguration,
                  "explicit schedule coefficient " + std::to_string(i + 1) + " must be finite and >= 1");
    }
  }
  return ScheduleSpec(ExplicitSchedule{std::move(coefficients)});
}

std::string ScheduleSpec::kind() const {
  return std::visit(Overloaded{
                        [](const ConstantSchedule&) { return std::string("constant"); },
                        [](const PolynomialSchedule&) { return std::string("polynomial"); },
                        [](const GeometricSchedule&) { return std::string("geometric"); },
                        [](const ExplicitSchedule&) { return std::string("explicit"); },
                    },
                    variant_);
}

std::string ScheduleSpec::label() const {
  return std::visit(Overloaded{
                        [](const ConstantSchedule& c) { return "constant(c=" + detail::compact(c.c) + ")"; },
                        [](const PolynomialSchedule& p) { return "polynomial(a=" + detail::compact(p.a) + ")"; },
                        [](const GeometricSchedule& g) { return "geometric(b=" + detail::compact(g.b) + ")"; },
                        [](const ExplicitSchedule& e) {
                          return "explicit(n=" + std::to_string(e.coefficients.size()) + ")";
                        },
                    },
                    variant_);
}

double coefficient(const ScheduleSpec& schedule, std::uint64_t t) {
  if (t == 0) throw Error(ErrorCode::kIndex, "schedule step 0 is the real-data step; coefficients start at t = 1");
  return std::visit(Overloaded{
                        [](const ConstantSchedule& c) { return c.c; },
                        [&](const PolynomialSchedule& p) { return std::pow(static_cast<double>(t), p.a); },
                        [&](const GeometricSchedule& g) { return std::pow(g.b, static_cast<double>(t)); },
                        [&](const ExplicitSchedule& e) { return explicit_prefix(e, t)[t - 1]; },
                    },
                    schedule.variant());
}

std::uint64_t sample_size(const ScheduleSpec& schedule, std::uint64_t t, std::uint64_t n0) {
  if (n0 == 0) throw Error(ErrorCode::kConfiguration, "initial sample size n0 must be >= 1");
  const double product = coefficient(schedule, t) * static_cast<double>(n0);
  // 2^63 keeps the result representable in both uint64 and int64 arithmetic.
  if (!std::isfinite(product) || product >= 0x1.0p63) {
    throw Error(ErrorCode::kScheduleOverflow, "sample size overflows the integer range at step t = " +
                                                  std::to_string(t) + " (c_t * n0 = " + detail::compact(product) +
                                                  ")");
  }
  const double nearest = std::nearbyint(product);
  const double rounded = std::abs(product - nearest) <= 1e-9 * product ? nearest : std::ceil(product);
  return static_cast<std::uint64_t>(rounded);
}

double inverse_coefficient_sum(const ScheduleSpec& schedule, std::uint64_t T) {
  require_horizon(T);
  return coefficient_power_sum(schedule, T - 1, 1.0);
}

SeriesValue inverse_coefficient_sum_limit(const ScheduleSpec& schedule) {
  return std::visit(Overloaded{
                        [](const ConstantSchedule&) { return SeriesValue{INFINITY, true}; },
                        [](const PolynomialSchedule& p) {
                          return p.a > 1.0 ? SeriesValue{zeta(p.a), false} : SeriesValue{INFINITY, true};
                        },
                        [](const GeometricSchedule& g) { return SeriesValue{1.0 / (g.b - 1.0), false}; },
                        [](const ExplicitSchedule&) -> SeriesValue {
                          throw Error(ErrorCode::kConfiguration, "explicit schedules have no infinite-horizon limit");
                        },
                    },
                    schedule.variant());
}

double drift_ratio(const ScheduleSpec& schedule, std::uint64_t T) {
  require_horizon(T);
  const double root_sum = 1.0 + coefficient_power_sum(schedule, T - 1, 0.5);
  const double inverse_sum = 1.0 + coefficient_power_sum(schedule, T - 1, 1.0);
  return root_sum / std::sqrt(inverse_sum);
}

SeriesValue drift_ratio_limit(const ScheduleSpec& schedule) {
  return std::visit(Overloaded{
                        [](const ConstantSchedule&) { return SeriesValue{INFINITY, true}; },
                        [](const PolynomialSchedule& p) {
                          if (p.a <= 2.0) return SeriesValue{INFINITY, true};
                          return SeriesValue{(1.0 + zeta(p.a / 2.0)) / std::sqrt(1.0 + zeta(p.a)), false};
                        },
                        [](const GeometricSchedule& g) {
                          const double root = 1.0 + 1.0 / (std::sqrt(g.b) - 1.0);
                          return SeriesValue{root / std::sqrt(1.0 + 1.0 / (g.b - 1.0)), false};
                        },
                        [](const ExplicitSchedule&) -> SeriesValue {
                          throw Error(ErrorCode::kConfiguration, "explicit schedules have no infinite-horizon limit");
                        },
                    },
                    schedule.variant());
}

std::string to_string(CollapseRegime regime) {
  switch (regime) {
    case CollapseRegime::kMartingale: return "martingale";
    case CollapseRegime::kSmallBias: return "small_bias";
    case CollapseRegime::kLargeBias: return "large_bias";
    case CollapseRegime::kUnionBound: return "union_bound";
  }
  return "unknown";
}

CollapseThreshold collapse_threshold(const RateOrder& order, const BiasSpec& bias) {
  if (order.rate != RateKind::kPower) {
    throw Error(ErrorCode::kUnsupported, "collapse thresholds are defined for polynomial rates n^kappa only");
  }
  check_bias_consistency(order, bias);
  const bool fast_rate = order.kappa >= order.gamma / 2.0;
  if (fast_rate && bias.is_unbiased()) return {CollapseRegime::kMartingale, 1.0};
  if (fast_rate && *bias.rho >= 1.0) return {CollapseRegime::kSmallBias, 1.0};
  if (fast_rate) return {CollapseRegime::kLargeBias, 1.0 / *bias.rho};
  return {CollapseRegime::kUnionBound, order.gamma / order.kappa};
}

CollapseThreshold collapse_threshold(const TailBoundSpec& tail, const BiasSpec& bias) {
  return collapse_threshold(tail.order, bias);
}

}  // namespace collapse_lab
