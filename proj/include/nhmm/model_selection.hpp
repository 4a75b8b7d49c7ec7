#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhmm/data.hpp"
#include "nhmm/emission.hpp"
#include "nhmm/store.hpp"
#include "nhmm/transition.hpp"

namespace nhmm {

/// Forward recursion in log space. `log_q[t]` governs the move into day t,
/// `log_f` is days x K; day 0 starts from a point mass on state 0.
double forward_log_likelihood(const std::vector<Eigen::MatrixXd>& log_q, const Eigen::MatrixXd& log_f);

/// log p(y | x, w, zeta, theta) with the hidden states summed out. Missing
/// cells contribute a factor of 1.
double forward_log_likelihood(const ObservationPanel& panel, const CovariateSet& covariates,
                              const TransitionCoefficients& coeffs, const EmissionParams& params);

/// Effective parameter count K(K-1) + B(K-1) + KS + AS + (K-2)S + 2SK.
long count_parameters(int states, int stations, int w_count, int x_count);

double bic(double log_likelihood, long param_count, long n_observations);

struct PredictiveScore {
  double value = 0.0;
  /// 0-based held-out day where the averaged density vanished, or -1.
  long failed_day = -1;
};

/// Sum over held-out days of log(mean over draws of prod_s f(y_rs | z*_r)).
/// Each draw simulates one hidden path over the holdout starting from its
/// final training state. Missing held-out cells are skipped.
PredictiveScore predictive_log_score(const ObservationPanel& held_out, const PosteriorStore& store,
                                     const CovariateSet& covariates, std::uint64_t seed);

/// Per-year improvement factor exp((pls_a - pls_b) / years).
double annual_ratio(double pls_a, double pls_b, double years);

/// Value reported for an infinite occurrence log-odds statistic.
inline constexpr double kLogOddsCap = 1e6;

struct PairStatistics {
  /// log(matched days / mismatched days) of the wet/dry series.
  double log_odds = 0.0;
  /// Spearman correlation of the amounts, ties at average rank.
  double spearman = 0.0;
  long days = 0;
};

/// Statistics over the days both series observe. Returns NaN fields when no
/// day is shared or a series is constant.
PairStatistics pair_statistics(std::span<const double> a, std::span<const double> b);

struct SpatialDiagnostic {
  int station_i = 0;
  int station_j = 0;
  PairStatistics first;
  PairStatistics second;
};

/// Pairwise statistics for every station pair i < j in both panels (for
/// example observed and simulated).
std::vector<SpatialDiagnostic> spatial_diagnostics(const ObservationPanel& first, const ObservationPanel& second);

struct ModelScore {
  int states = 0;
  long param_count = 0;
  double log_likelihood = 0.0;
  double bic = 0.0;
  double pls = 0.0;
  bool has_pls = false;
  long n_observations = 0;
  std::uint64_t seed = 0;
};

/// BIC at the posterior-mean parameters, plus PLS when a holdout is given.
ModelScore score_model(const PosteriorStore& store, const ObservationPanel& train, const CovariateSet& train_cov,
                       const ObservationPanel* held_out, const CovariateSet* held_cov, std::uint64_t seed);

}  // namespace nhmm
