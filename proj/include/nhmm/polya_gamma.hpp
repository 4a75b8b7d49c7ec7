#pragma once

#include "nhmm/random.hpp"

namespace nhmm::pg {

/// Split point between the truncated inverse-Gaussian proposal (below) and the
/// exponential proposal (above) of the alternating-series sampler.
inline constexpr double kCrossover = 0.64;

/// Maximum partial-sum terms evaluated before a proposal is abandoned.
inline constexpr int kMaxSeriesTerms = 200;

/// Exact draw from PG(1, tilt). Symmetric in the sign of tilt.
/// Throws InputError for a non-finite tilt.
double draw_pg1(double tilt, Rng& rng);

/// Approximate PG(shape, tilt) draw from the truncated weighted sum of
/// Gamma(shape, 1) variates. Independent of draw_pg1; used as a test oracle.
/// Throws ConfigError when terms < 100.
double draw_pg_gamma_sum(double shape, double tilt, int terms, Rng& rng);

/// E[PG(1, tilt)] = tanh(tilt/2) / (2 tilt), with limit 1/4 at zero.
double pg1_mean(double tilt);

}  // namespace nhmm::pg
