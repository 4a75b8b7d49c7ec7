#include "nhmm/emission.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nhmm/errors.hpp"
#include "nhmm/stats.hpp"
#include "nhmm/truncated_normal.hpp"

namespace nhmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(exp(a) - exp(b)) for a >= b.
double log_diff_exp(double a, double b) {
  if (b == -kInf) return a;
  if (b >= a) return -kInf;
  return a + std::log1p(-std::exp(b - a));
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double top = std::max(a, b);
  return top + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

EmissionParams::EmissionParams(int states, int stations, int w_count)
    : lambda{Eigen::MatrixXd::Ones(states, stations), Eigen::MatrixXd::Ones(states, stations)},
      beta0(Eigen::MatrixXd::Zero(states, stations)),
      beta1(Eigen::MatrixXd::Zero(w_count, stations)),
      gamma(Eigen::VectorXd::Ones(stations)) {}

void EmissionParams::validate() const {
  const auto k = beta0.rows();
  const auto s = beta0.cols();
  for (const auto& l : lambda) {
    if (l.rows() != k || l.cols() != s) throw InputError("emission rates have inconsistent shape");
    if (!l.allFinite() || (l.array() <= 0.0).any()) throw InputError("emission rates must be positive and finite");
  }
  if (beta1.cols() != s || gamma.size() != s) throw InputError("emission coefficients have inconsistent shape");
  if (!beta0.allFinite() || !beta1.allFinite()) throw InputError("emission coefficients contain non-finite values");
  if (!gamma.allFinite() || (gamma.array() <= 0.0).any()) throw InputError("cutpoints must be positive and finite");
}

double covariate_effect(const EmissionParams& params, const CovariateSet& covariates, Eigen::Index t,
                        Eigen::Index s) {
  double acc = 0.0;
  for (std::size_t a = 0; a < covariates.w.size(); ++a) {
    acc += covariates.w[a](t, s) * params.beta1(static_cast<Eigen::Index>(a), s);
  }
  return acc;
}

MixingWeights mixing_weights(double mu, double gamma) {
  MixingWeights w;
  w.p0 = normal_cdf(-mu);
  w.p2 = normal_ccdf(gamma - mu);
  // Difference taken on whichever side of the distribution keeps precision.
  w.p1 = mu < 0.0 ? normal_ccdf(-mu) - normal_ccdf(gamma - mu) : normal_cdf(gamma - mu) - normal_cdf(-mu);
  w.p1 = std::max(w.p1, 0.0);
  return w;
}

std::array<double, 3> log_mixing_weights(double mu, double gamma) {
  std::array<double, 3> lw{};
  lw[0] = log_normal_cdf(-mu);
  lw[2] = log_normal_cdf(mu - gamma);
  if (mu < 0.0) {
    lw[1] = log_diff_exp(log_normal_cdf(mu), lw[2]);
  } else {
    lw[1] = log_diff_exp(log_normal_cdf(gamma - mu), lw[0]);
  }
  return lw;
}

double emission_density(double y, const MixingWeights& weights, double lambda_light, double lambda_heavy) {
  if (!(y >= 0.0)) throw InputError("rainfall amount must be non-negative");
  if (y == 0.0) return weights.p0;
  return weights.p1 * lambda_light * std::exp(-lambda_light * y) +
         weights.p2 * lambda_heavy * std::exp(-lambda_heavy * y);
}

double log_emission_density(double y, const std::array<double, 3>& log_weights, double lambda_light,
                            double lambda_heavy) {
  if (!(y >= 0.0)) throw InputError("rainfall amount must be non-negative");
  if (y == 0.0) return log_weights[0];
  return log_add_exp(log_weights[1] + std::log(lambda_light) - lambda_light * y,
                     log_weights[2] + std::log(lambda_heavy) - lambda_heavy * y);
}

Category sample_L(double y, const MixingWeights& weights, double lambda_light, double lambda_heavy, Rng& rng) {
  if (y == 0.0) return 0;
  const double light_kernel = std::log(lambda_light) - lambda_light * y;
  const double heavy_kernel = std::log(lambda_heavy) - lambda_heavy * y;
  const double a = std::log(weights.p1) + light_kernel;
  const double b = std::log(weights.p2) + heavy_kernel;
  if (a == -kInf && b == -kInf) return light_kernel >= heavy_kernel ? 1 : 2;
  if (b == -kInf) return 1;
  if (a == -kInf) return 2;
  const double prob_light = 1.0 / (1.0 + std::exp(b - a));
  return rng.uniform() < prob_light ? 1 : 2;
}

double sample_M(Category category, double mu, double gamma, Rng& rng) {
  switch (category) {
    case 0:
      return truncated_normal(mu, -kInf, 0.0, rng);
    case 1:
      return truncated_normal(mu, 0.0, gamma, rng);
    case 2:
      return truncated_normal(mu, gamma, kInf, rng);
    default:
      throw InputError("rainfall category must be 0, 1 or 2");
  }
}

double sample_gamma_cutpoint(const Eigen::Ref<const Eigen::VectorXd>& latent,
                             const Eigen::Ref<const Eigen::VectorXi>& category, double previous, double cap,
                             Rng& rng, EmissionDiagnostics* diag) {
  double lower = 0.0;
  double upper = cap;
  for (Eigen::Index t = 0; t < latent.size(); ++t) {
    if (category[t] == 1) lower = std::max(lower, latent[t]);
    if (category[t] == 2) upper = std::min(upper, latent[t]);
  }
  if (!(upper > lower)) {
    if (diag) ++diag->cutpoint_retained;
    return previous;
  }
  return lower + (upper - lower) * rng.uniform();
}

double sample_lambda(const CellStats& cell, const EmissionPrior& prior, Rng& rng) {
  return rng.gamma(prior.lambda_shape + static_cast<double>(cell.count), prior.lambda_rate + cell.total);
}

void sample_betas_station(Eigen::Index s, const Eigen::MatrixXd& latent, const StateChain& states,
                          const CovariateSet& covariates, EmissionParams& params, const EmissionPrior& prior,
                          Rng& rng, EmissionDiagnostics* diag) {
  const int k_count = params.states();
  const auto a_count = static_cast<int>(covariates.w.size());
  const int dim = k_count + a_count;
  const Eigen::Index days = latent.rows();

  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd w(a_count);
  for (Eigen::Index t = 0; t < days; ++t) {
    const int z = states[static_cast<std::size_t>(t)];
    const double m = latent(t, s);
    for (int a = 0; a < a_count; ++a) w[a] = covariates.w[static_cast<std::size_t>(a)](t, s);
    precision(z, z) += 1.0;
    rhs[z] += m;
    if (a_count > 0) {
      precision.block(k_count, z, a_count, 1) += w;
      precision.bottomRightCorner(a_count, a_count).noalias() += w * w.transpose();
      rhs.tail(a_count) += m * w;
    }
  }
  if (a_count > 0) {
    precision.block(0, k_count, k_count, a_count) = precision.block(k_count, 0, a_count, k_count).transpose();
  }
  precision.diagonal().array() += prior.beta_precision;

  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    if (diag) ++diag->ridge_jitter;
    precision.diagonal().array() += kBetaRidge;
    llt.compute(precision);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("probit coefficient precision is singular at station " + std::to_string(s + 1));
    }
  }
  const Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd noise(dim);
  for (int h = 0; h < dim; ++h) noise[h] = rng.normal();
  const Eigen::VectorXd draw = mean + llt.matrixU().solve(noise);

  params.beta0.col(s) = draw.head(k_count);
  if (a_count > 0) params.beta1.col(s) = draw.tail(a_count);
}

void sample_betas(const Eigen::MatrixXd& latent, const StateChain& states, const CovariateSet& covariates,
                  EmissionParams& params, const EmissionPrior& prior, Rng& rng, EmissionDiagnostics* diag) {
  const std::uint64_t key = rng.key();
  for (Eigen::Index s = 0; s < latent.cols(); ++s) {
    Rng stream(key, {static_cast<std::uint64_t>(s)});
    sample_betas_station(s, latent, states, covariates, params, prior, stream, diag);
  }
}

void impute_station(Eigen::Index s, const ObservationPanel& panel, const StateChain& states,
                    const CovariateSet& covariates, const EmissionParams& params, Eigen::MatrixXd& completed,
                    Rng& rng) {
  for (Eigen::Index t = 0; t < panel.days(); ++t) {
    if (panel.observed(t, s)) continue;
    const int z = states[static_cast<std::size_t>(t)];
    const double mu = params.beta0(z, s) + covariate_effect(params, covariates, t, s);
    const MixingWeights w = mixing_weights(mu, params.gamma[s]);
    const double u = rng.uniform();
    if (u < w.p0) {
      completed(t, s) = 0.0;
    } else {
      const int j = u < w.p0 + w.p1 ? 0 : 1;
      completed(t, s) = rng.exponential() / params.lambda[static_cast<std::size_t>(j)](z, s);
    }
  }
}

void update_station(Eigen::Index s, const Eigen::MatrixXd& completed, const StateChain& states,
                    const CovariateSet& covariates, EmissionParams& params, ProbitLatents& latents,
                    const EmissionPrior& prior, Rng& rng, EmissionDiagnostics& diag) {
  const Eigen::Index days = completed.rows();
  const int k_count = params.states();
  const double gamma_old = params.gamma[s];

  for (Eigen::Index t = 0; t < days; ++t) {
    const int z = states[static_cast<std::size_t>(t)];
    const double mu = params.beta0(z, s) + covariate_effect(params, covariates, t, s);
    const double y = completed(t, s);
    const MixingWeights w = mixing_weights(mu, gamma_old);
    const Category c = sample_L(y, w, params.lambda[0](z, s), params.lambda[1](z, s), rng);
    latents.category(t, s) = c;
    latents.latent(t, s) = sample_M(c, mu, gamma_old, rng);
  }

  params.gamma[s] =
      sample_gamma_cutpoint(latents.latent.col(s), latents.category.col(s), gamma_old, prior.gamma_cap, rng, &diag);

  sample_betas_station(s, latents.latent, states, covariates, params, prior, rng, &diag);

  std::array<std::vector<CellStats>, 2> cells{std::vector<CellStats>(static_cast<std::size_t>(k_count)),
                                              std::vector<CellStats>(static_cast<std::size_t>(k_count))};
  for (Eigen::Index t = 0; t < days; ++t) {
    const int c = latents.category(t, s);
    if (c == 0) continue;
    auto& cell = cells[static_cast<std::size_t>(c - 1)][static_cast<std::size_t>(states[static_cast<std::size_t>(t)])];
    ++cell.count;
    cell.total += completed(t, s);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    for (int k = 0; k < k_count; ++k) {
      params.lambda[j](k, s) = sample_lambda(cells[j][static_cast<std::size_t>(k)], prior, rng);
    }
  }
}

Eigen::MatrixXd emission_log_table(const ObservationPanel& panel, const CovariateSet& covariates,
                                   const EmissionParams& params) {
  const int k_count = params.states();
  const Eigen::Index days = panel.days();
  const Eigen::Index stations = panel.stations();
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(days, k_count);
#pragma omp parallel for schedule(static)
  for (Eigen::Index t = 0; t < days; ++t) {
    for (Eigen::Index s = 0; s < stations; ++s) {
      if (!panel.observed(t, s)) continue;
      const double effect = covariate_effect(params, covariates, t, s);
      const double y = panel.values(t, s);
      for (int k = 0; k < k_count; ++k) {
        const auto lw = log_mixing_weights(params.beta0(k, s) + effect, params.gamma[s]);
        table(t, k) += log_emission_density(y, lw, params.lambda[0](k, s), params.lambda[1](k, s));
      }
    }
  }
  return table;
}

void order_rate_components(EmissionParams& params) {
  for (Eigen::Index s = 0; s < params.beta0.cols(); ++s) {
    for (Eigen::Index k = 0; k < params.beta0.rows(); ++k) {
      if (params.lambda[0](k, s) < params.lambda[1](k, s)) std::swap(params.lambda[0](k, s), params.lambda[1](k, s));
    }
  }
}

}  // namespace nhmm
