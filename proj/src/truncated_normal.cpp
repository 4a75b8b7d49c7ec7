#include "nhmm/truncated_normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "nhmm/errors.hpp"
#include "nhmm/stats.hpp"

namespace nhmm {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Inverse of the upper tail: returns x with 1 - Phi(x) = q.
double upper_tail_quantile(double q) { return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * q); }

// Standard normal on (a, b) with a >= kTailThreshold.
double tail_draw(double a, double b, Rng& rng) {
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  if (std::isfinite(b) && (b - a) * alpha < 1.0) {
    // narrow interval: uniform proposal, acceptance >= exp(-(b-a)(b+a)/2)
    while (true) {
      const double x = a + rng.uniform() * (b - a);
      if (rng.uniform() <= std::exp(0.5 * (a * a - x * x))) return x;
    }
  }
  while (true) {
    const double x = a + rng.exponential() / alpha;
    if (x >= b) continue;
    const double d = x - alpha;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return x;
  }
}

// Standard normal on (a, b) with a >= 0, a below the tail threshold.
double upper_side_draw(double a, double b, Rng& rng) {
  const double qa = normal_ccdf(a);
  const double qb = std::isfinite(b) ? normal_ccdf(b) : 0.0;
  if (!(qa > qb)) return a + rng.uniform() * (b - a);
  const double x = upper_tail_quantile(qb + rng.uniform() * (qa - qb));
  return std::clamp(x, a, b);
}

double standard_draw(double a, double b, Rng& rng) {
  if (a >= kTailThreshold) return tail_draw(a, b, rng);
  if (b <= -kTailThreshold) return -tail_draw(-b, -a, rng);
  if (a >= 0.0) return upper_side_draw(a, b, rng);
  if (b <= 0.0) return -upper_side_draw(-b, -a, rng);
  const double pa = std::isfinite(a) ? normal_cdf(a) : 0.0;
  const double pb = std::isfinite(b) ? normal_cdf(b) : 1.0;
  const double x = normal_quantile(pa + rng.uniform() * (pb - pa));
  return std::clamp(x, a, b);
}

}  // namespace

double truncated_normal(double mean, double lower, double upper, Rng& rng) {
  if (!(lower < upper)) throw InputError("truncated_normal: empty interval");
  return mean + standard_draw(lower - mean, upper - mean, rng);
}

double truncated_normal_mean(double mean, double lower, double upper) {
  const double a = lower - mean;
  const double b = upper - mean;
  const double pdf_a = std::isfinite(a) ? std_normal_pdf(a) : 0.0;
  const double pdf_b = std::isfinite(b) ? std_normal_pdf(b) : 0.0;
  double mass;
  if (a >= 0.0) {
    mass = normal_ccdf(a) - (std::isfinite(b) ? normal_ccdf(b) : 0.0);
  } else {
    mass = (std::isfinite(b) ? normal_cdf(b) : 1.0) - (std::isfinite(a) ? normal_cdf(a) : 0.0);
  }
  return mean + (pdf_a - pdf_b) / mass;
}

}  // namespace nhmm
