#include "collapse_lab/special_functions.hpp"

#include <cmath>
#include <string>

#include "collapse_lab/error.hpp"

namespace collapse_lab {

namespace {
constexpr std::uint64_t kZetaExplicitTerms = 10000;
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorCode::kParameterDomain, "digamma requires a finite positive argument, got " + std::to_string(x));
  }
  double shift = 0.0;
  while (x < 8.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_2k / (2k x^2k), k = 1..7.
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
  return shift + std::log(x) - 0.5 * inv - series;
}

double power_tail_sum(double s, std::uint64_t first) {
  if (!(s > 1.0)) {
    throw Error(ErrorCode::kParameterDomain, "power_tail_sum requires s > 1");
  }
  if (first == 0) throw Error(ErrorCode::kIndex, "power_tail_sum requires first >= 1");
  if (first < 16) {
    // Euler-Maclaurin needs a moderately large start; sum the first few directly.
    double head = 0.0;
    for (std::uint64_t t = first; t < 16; ++t) head += std::pow(static_cast<double>(t), -s);
    return head + power_tail_sum(s, 16);
  }
  const double n = static_cast<double>(first);
  const double f = std::pow(n, -s);
  double tail = n * f / (s - 1.0) + 0.5 * f;
  tail += s * f / n / 12.0;
  tail -= s * (s + 1.0) * (s + 2.0) * f / (n * n * n) / 720.0;
  tail += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * f / std::pow(n, 5) / 30240.0;
  return tail;
}

double zeta(double s) {
  if (!(s > 1.0)) throw Error(ErrorCode::kParameterDomain, "zeta requires s > 1");
  // Smallest terms first.
  double sum = power_tail_sum(s, kZetaExplicitTerms);
  for (std::uint64_t t = kZetaExplicitTerms - 1; t >= 1; --t) {
    sum += std::pow(static_cast<double>(t), -s);
  }
  return sum;
}

}  // namespace collapse_lab
