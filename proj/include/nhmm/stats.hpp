#pragma once

#include <span>
#include <vector>

namespace nhmm {

inline constexpr double kPi = 3.14159265358979323846;

/// Standard normal CDF.
double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate for large positive x.
double normal_ccdf(double x);
/// log Phi(x), finite for very negative x.
double log_normal_cdf(double x);
/// Phi^{-1}(p) for p in (0, 1).
double normal_quantile(double p);

double log_sum_exp(std::span<const double> values);

/// Type-7 (linear interpolation) empirical quantile of already sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Ranks with ties replaced by their average rank (1-based).
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace nhmm
