#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhmm/data.hpp"
#include "nhmm/emission.hpp"
#include "nhmm/random.hpp"
#include "nhmm/store.hpp"
#include "nhmm/transition.hpp"

namespace nhmm {

struct ForecastDraw {
  /// Transition matrix used for each step; empty when not requested.
  std::vector<Eigen::MatrixXd> q_star;
  StateChain z_star;
  Eigen::MatrixXd y_star;
};

/// Draw one rainfall amount from the emission mixture.
double draw_emission(double mu, double gamma, double lambda_light, double lambda_heavy, Rng& rng);

/// Predictive chain over the days of `covariates` (already standardized).
/// Step r draws z*_r from row z*_{r-1} of Q_r, starting from `init_state`
/// as the state of the day before the first step, then draws y*_r.
ForecastDraw simulate_chain(const TransitionCoefficients& coeffs, const EmissionParams& params,
                            const CovariateSet& covariates, int init_state, Rng& rng, bool keep_q = false);

/// Hidden path only, with the same conventions as simulate_chain.
StateChain simulate_states(const TransitionCoefficients& coeffs, const Eigen::MatrixXd& x, int init_state, Rng& rng);

/// Model-consistent path: day 0 is state 0, later days follow Q_t.
ForecastDraw simulate_in_sample(const TransitionCoefficients& coeffs, const EmissionParams& params,
                                const CovariateSet& covariates, Rng& rng);

/// Long-run occupancy of a fixed transition matrix.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& q);

/// Covariates for synthetic data: every column is a stationary AR(1)
/// series (w columns independently per station), then standardized exactly.
struct CovariateSpec {
  int x_count = 0;
  int w_count = 0;
  double autocorrelation = 0.9;
};

struct SyntheticData {
  ObservationPanel panel;
  CovariateSet covariates;
  StateChain states;
  /// Values before the missingness mask was applied.
  Eigen::MatrixXd complete_values;
};

/// Simulate a panel from the model with the given parameters. Exactly
/// round(missing_fraction * days * stations) cells, chosen uniformly, are
/// masked.
SyntheticData generate_synthetic(const TransitionCoefficients& coeffs, const EmissionParams& params, long days,
                                 const CovariateSpec& spec, double missing_fraction, std::uint64_t seed);

/// Persistent regimes ordered from dry to wet with clearly separated
/// emissions; used as the default truth for synthetic data.
std::pair<TransitionCoefficients, EmissionParams> reference_truth(int states, int stations, int w_count,
                                                                  int x_count);

enum class ScenarioLevel { Min, Max, Mean };

struct ScenarioTarget {
  bool emission = false;  // w covariate when true, x covariate otherwise
  int index = 0;          // 0-based column
};

struct ScenarioOptions {
  /// Columns (by name) left at their supplied values instead of 0.
  std::vector<std::string> keep;
  /// Posterior draws used, spread evenly over the store; 0 uses all.
  std::size_t max_draws = 0;
  std::uint64_t seed = 1;
  int period = 365;
};

/// Mean simulated rainfall per day of the period (rows) and station, with
/// the target covariate pinned to its min, max or mean (0) over `covariates`
/// and every other column held at 0 on the standardized scale.
Eigen::MatrixXd covariate_scenario_sweep(const PosteriorStore& store, const ScenarioTarget& target,
                                         ScenarioLevel level, const CovariateSet& covariates,
                                         const ScenarioOptions& options);

}  // namespace nhmm
