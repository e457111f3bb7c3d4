#pragma once

#include <cstdint>

namespace collapse_lab {

/// Standard normal CDF, via erfc (absolute error well below 1e-15).
double normal_cdf(double x);

/// Digamma psi(x) for x > 0: recurrence up to x >= 8, then the asymptotic
/// series through the x^-14 term. Absolute error near 1e-15.
double digamma(double x);

/// sum_{t >= first} t^-s for s > 1 and first >= 1, by Euler-Maclaurin with
/// corrections through the sixth Bernoulli number.
double power_tail_sum(double s, std::uint64_t first);

/// Riemann zeta for s > 1: explicit terms below 10^4 plus the tail above.
double zeta(double s);

}  // namespace collapse_lab
