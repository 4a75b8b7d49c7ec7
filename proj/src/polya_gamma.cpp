#include "nhmm/polya_gamma.hpp"

#include <cmath>

#include "nhmm/errors.hpp"
#include "nhmm/stats.hpp"

namespace nhmm::pg {

namespace {

constexpr double kPi2 = kPi * kPi;
constexpr double kLogPi = 1.14472988584940017414;
constexpr double kLog2OverPi = -0.45158270528945486473;

// Coefficient a_n(x) of the Jacobi-theta series; piecewise around the crossover.
double series_term(int n, double x) {
  const double k = n + 0.5;
  if (x <= kCrossover) {
    return std::exp(kLogPi + std::log(k) + 1.5 * (kLog2OverPi - std::log(x)) - 2.0 * k * k / x);
  }
  return std::exp(kLogPi + std::log(k) - 0.5 * kPi2 * k * k * x);
}

// Probability that the proposal comes from the exponential piece above the crossover.
double exponential_piece_mass(double z) {
  const double t = kCrossover;
  const double fz = 0.125 * kPi2 + 0.5 * z * z;
  const double root = std::sqrt(1.0 / t);
  const double b = root * (t * z - 1.0);
  const double a = -root * (t * z + 1.0);
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + log_normal_cdf(b);
  const double xa = x0 + z + log_normal_cdf(a);
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, crossover).
double truncated_inverse_gaussian(double z, Rng& rng) {
  const double t = kCrossover;
  double x = t + 1.0;
  if (1.0 / t > z) {
    // mean above the truncation point: scaled-normal proposal plus exponential tilt
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / t) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = 1.0 + e1 * t;
      x = t / (x * x);
      alpha = std::exp(-0.5 * z * z * x);
    }
    return x;
  }
  const double mu = 1.0 / z;
  while (x > t) {
    const double y = rng.normal();
    const double mu_y = mu * y * y;
    x = mu + 0.5 * mu * mu_y - 0.5 * mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
    if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
  }
  return x;
}

}  // namespace

double draw_pg1(double tilt, Rng& rng) {
  if (!std::isfinite(tilt)) throw InputError("draw_pg1: non-finite tilt");
  // PG(1, c) = J*(1, c/2) / 4
  const double z = 0.5 * std::fabs(tilt);
  const double fz = 0.125 * kPi2 + 0.5 * z * z;
  const double mass = exponential_piece_mass(z);

  while (true) {
    const double x = rng.uniform() < mass ? kCrossover + rng.exponential() / fz
                                          : truncated_inverse_gaussian(z, rng);
    double s = series_term(0, x);
    const double u = rng.uniform() * s;
    for (int n = 1; n <= kMaxSeriesTerms; ++n) {
      if (n % 2 == 1) {
        s -= series_term(n, x);
        if (u <= s) return 0.25 * x;
      } else {
        s += series_term(n, x);
        if (u > s) break;
      }
    }
  }
}

double draw_pg_gamma_sum(double shape, double tilt, int terms, Rng& rng) {
  if (terms < 100) throw ConfigError("draw_pg_gamma_sum: at least 100 terms required");
  if (!(shape > 0.0)) throw ConfigError("draw_pg_gamma_sum: shape must be positive");
  if (!std::isfinite(tilt)) throw InputError("draw_pg_gamma_sum: non-finite tilt");
  const double offset = tilt * tilt / (4.0 * kPi2);
  const bool unit_shape = shape == 1.0;
  double sum = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double g = unit_shape ? rng.exponential() : rng.gamma(shape, 1.0);
    const double d = k - 0.5;
    sum += g / (d * d + offset);
  }
  return sum / (2.0 * kPi2);
}

double pg1_mean(double tilt) {
  const double z = std::fabs(tilt);
  if (z < 1e-6) return 0.25 - z * z / 48.0;
  return std::tanh(0.5 * z) / (2.0 * z);
}

}  // namespace nhmm::pg
