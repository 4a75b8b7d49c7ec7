#pragma once

#include "nhmm/random.hpp"

namespace nhmm {

/// Standardized distance beyond which the tail sampler replaces inverse-CDF.
inline constexpr double kTailThreshold = 5.0;

/// Draw from N(mean, 1) restricted to (lower, upper). Either bound may be
/// infinite; lower < upper is required.
double truncated_normal(double mean, double lower, double upper, Rng& rng);

/// Analytic mean of N(mean, 1) restricted to (lower, upper).
double truncated_normal_mean(double mean, double lower, double upper);

}  // namespace nhmm
