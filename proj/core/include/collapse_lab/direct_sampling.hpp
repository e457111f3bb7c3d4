#pragma once

#include <cstdint>

#include "collapse_lab/estimators.hpp"
#include "collapse_lab/families.hpp"
#include "collapse_lab/random.hpp"

namespace collapse_lab {

/// Whether M(D) for D ~ P_theta^n has a closed-form law that can be sampled
/// without materializing D (every pair except the logistic fit).
bool has_direct_sampler(const FamilySpec& family, const EstimatorSpec& estimator);

/// One draw of M(D) with D ~ P_theta^n, taken from the exact law of the
/// estimator: e.g. theta + L z / sqrt(n) for the sample mean and
/// n theta / Gamma(n, 1) for the exponential MLE. Same distribution as
/// estimate(estimator, sample_dataset(family, theta, n, rng)), in O(p) work.
///
/// Throws kUnsupported when has_direct_sampler is false and kParameterDomain
/// for theta outside the family's space.
ParamPoint sample_estimate(const FamilySpec& family, const EstimatorSpec& estimator, const ParamPoint& theta,
                           std::uint64_t n, RandomStream& rng);

}  // namespace collapse_lab
