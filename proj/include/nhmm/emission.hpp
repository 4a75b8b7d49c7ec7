#pragma once

#include <array>

#include <Eigen/Dense>

#include "nhmm/data.hpp"
#include "nhmm/random.hpp"

namespace nhmm {

/// Zero-inflated two-exponential emission parameters.
struct EmissionParams {
  /// Rates in 1/mm, K x S each: lambda[0] light rain, lambda[1] heavy rain.
  std::array<Eigen::MatrixXd, 2> lambda;
  /// State-dependent probit intercepts, K x S.
  Eigen::MatrixXd beta0;
  /// Covariate coefficients shared across states, A x S.
  Eigen::MatrixXd beta1;
  /// Free cutpoint per station; the other cutpoint is fixed at 0.
  Eigen::VectorXd gamma;

  EmissionParams() = default;
  /// Unit rates, zero coefficients, unit cutpoints.
  EmissionParams(int states, int stations, int w_count);

  int states() const { return static_cast<int>(beta0.rows()); }
  int stations() const { return static_cast<int>(beta0.cols()); }
  int w_count() const { return static_cast<int>(beta1.rows()); }

  /// Throws InputError on shape mismatch, non-positive rates or cutpoints,
  /// or non-finite coefficients.
  void validate() const;
};

/// sum_a w_a(t, s) * beta1(a, s); the state-free part of the probit mean.
double covariate_effect(const EmissionParams& params, const CovariateSet& covariates, Eigen::Index t,
                        Eigen::Index s);

struct MixingWeights {
  double p0 = 1.0;  // dry
  double p1 = 0.0;  // light
  double p2 = 0.0;  // heavy
};

/// Ordered-probit category probabilities for latent mean mu and cutpoint gamma.
MixingWeights mixing_weights(double mu, double gamma);

/// log of the three weights, accurate when some of them underflow.
std::array<double, 3> log_mixing_weights(double mu, double gamma);

/// Point mass p0 at y == 0, otherwise the exponential-mixture density.
/// Throws InputError for y < 0.
double emission_density(double y, const MixingWeights& weights, double lambda_light, double lambda_heavy);

double log_emission_density(double y, const std::array<double, 3>& log_weights, double lambda_light,
                            double lambda_heavy);

/// Category 0 (dry), 1 (light) or 2 (heavy).
using Category = int;

struct ProbitLatents {
  Eigen::MatrixXi category;  // L, days x stations
  Eigen::MatrixXd latent;    // M, days x stations

  ProbitLatents() = default;
  ProbitLatents(Eigen::Index days, Eigen::Index stations)
      : category(Eigen::MatrixXi::Zero(days, stations)), latent(Eigen::MatrixXd::Constant(days, stations, -1.0)) {}
};

Category sample_L(double y, const MixingWeights& weights, double lambda_light, double lambda_heavy, Rng& rng);

/// N(mu, 1) truncated to the region of `category`: (-inf, 0), (0, gamma) or (gamma, inf).
double sample_M(Category category, double mu, double gamma, Rng& rng);

struct EmissionPrior {
  double lambda_shape = 1.0;
  double lambda_rate = 1.0;
  /// Precision of the N(0, 1/precision) prior on each beta; 0 is flat.
  double beta_precision = 0.0;
  /// Upper support of the cutpoint.
  double gamma_cap = 10.0;
};

/// Counters for the fall-back paths of the emission updates.
struct EmissionDiagnostics {
  long cutpoint_retained = 0;
  long ridge_jitter = 0;

  EmissionDiagnostics& operator+=(const EmissionDiagnostics& o) {
    cutpoint_retained += o.cutpoint_retained;
    ridge_jitter += o.ridge_jitter;
    return *this;
  }
};

/// Uniform draw between the largest light-rain latent (or 0) and the smallest
/// heavy-rain latent, never above `cap`. An empty interval keeps `previous`.
double sample_gamma_cutpoint(const Eigen::Ref<const Eigen::VectorXd>& latent,
                             const Eigen::Ref<const Eigen::VectorXi>& category, double previous, double cap,
                             Rng& rng, EmissionDiagnostics* diag = nullptr);

/// Sufficient statistics of one (component, state, station) cell.
struct CellStats {
  long count = 0;
  double total = 0.0;
};

/// Conjugate Gamma(shape + n, rate + sum y) draw.
double sample_lambda(const CellStats& cell, const EmissionPrior& prior, Rng& rng);

/// Ridge added to the normal equations when the beta design is singular.
inline constexpr double kBetaRidge = 1e-8;

/// Conjugate normal update of (beta0(., s), beta1(., s)) regressing the
/// latents of station s on [one-hot(z_t) | w(t, s)] with unit noise.
void sample_betas_station(Eigen::Index s, const Eigen::MatrixXd& latent, const StateChain& states,
                          const CovariateSet& covariates, EmissionParams& params, const EmissionPrior& prior,
                          Rng& rng, EmissionDiagnostics* diag = nullptr);

/// All stations; station s uses its own stream derived from `rng`.
void sample_betas(const Eigen::MatrixXd& latent, const StateChain& states, const CovariateSet& covariates,
                  EmissionParams& params, const EmissionPrior& prior, Rng& rng, EmissionDiagnostics* diag = nullptr);

/// Replace missing cells of station s in `completed` by draws from the
/// emission mixture at the current state.
void impute_station(Eigen::Index s, const ObservationPanel& panel, const StateChain& states,
                    const CovariateSet& covariates, const EmissionParams& params, Eigen::MatrixXd& completed,
                    Rng& rng);

/// One emission pass for station s on completed data: L, M, gamma, beta, lambda.
void update_station(Eigen::Index s, const Eigen::MatrixXd& completed, const StateChain& states,
                    const CovariateSet& covariates, EmissionParams& params, ProbitLatents& latents,
                    const EmissionPrior& prior, Rng& rng, EmissionDiagnostics& diag);

/// log f(y_t | z_t = k) summed over observed stations, days x K. Missing
/// cells contribute 0.
Eigen::MatrixXd emission_log_table(const ObservationPanel& panel, const CovariateSet& covariates,
                                   const EmissionParams& params);

/// Swap the two rates per (state, station) cell so that lambda[0] >= lambda[1].
/// For summarizing draws only: the mixing weights are not swapped with them.
void order_rate_components(EmissionParams& params);

}  // namespace nhmm
