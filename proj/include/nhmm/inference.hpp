#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhmm/data.hpp"
#include "nhmm/emission.hpp"
#include "nhmm/store.hpp"
#include "nhmm/transition.hpp"

namespace nhmm {

struct ModelPriors {
  /// Unset means flat on every free transition coefficient.
  std::optional<TransitionPrior> transition;
  EmissionPrior emission;
};

/// Everything the Gibbs sweep updates.
struct ChainState {
  StateChain z;
  TransitionCoefficients coeffs;
  PgAugmentation aug;
  EmissionParams emission;
  ProbitLatents latents;
  /// Observed values with the current imputations in the missing cells.
  Eigen::MatrixXd completed;
};

/// One MCMC chain over a fixed panel.
///
/// A sweep updates, in order: missing values, the per-station emission block
/// (L, M, gamma, beta, lambda), the hidden states, then omega and zeta. Every
/// random draw comes from a stream keyed by (seed, sweep, block, unit), so the
/// chain does not depend on the number of threads.
class GibbsSampler {
 public:
  GibbsSampler(ObservationPanel panel, CovariateSet covariates, int states, ModelPriors priors, std::uint64_t seed);

  void sweep();

  const ChainState& state() const { return state_; }
  /// For tests that set parameters directly; call refresh() afterwards.
  ChainState& mutable_state() { return state_; }
  /// Recompute the cached transition matrices after an external change.
  void refresh();

  const ObservationPanel& panel() const { return panel_; }
  const CovariateSet& covariates() const { return covariates_; }
  /// Replace the observed values; the missingness mask stays as it is.
  void replace_observations(const Eigen::MatrixXd& values);

  /// Log-likelihood of the observed data at the current parameters,
  /// marginalizing the hidden states.
  double log_likelihood() const;

  long sweeps() const { return sweeps_; }
  const EmissionDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  ObservationPanel panel_;
  CovariateSet covariates_;
  ModelPriors priors_;
  TransitionPrior transition_prior_;
  std::uint64_t seed_;
  long sweeps_ = 0;
  ChainState state_;
  std::vector<Eigen::MatrixXd> log_q_;
  Eigen::MatrixXd log_f_;
  bool log_f_valid_ = false;
  EmissionDiagnostics diagnostics_;
};

/// Set the worker count for parallel loops; 0 keeps the default. Results
/// do not depend on it.
void set_threads(int threads);

/// Progress hook: (completed sweeps, total sweeps).
using ProgressFn = std::function<void(long, long)>;

/// Burn-in followed by `iterations` sweeps, keeping every `thinning`-th.
PosteriorStore run_chain(const ObservationPanel& panel, const CovariateSet& covariates, const McmcConfig& config,
                         const ModelPriors& priors = {}, const ProgressFn& progress = {});

/// Draw every missing cell of `completed` from the emission mixture at the
/// current states; station s uses a stream derived from (key, s).
void impute_missing(const ObservationPanel& panel, const StateChain& states, const EmissionParams& params,
                    const CovariateSet& covariates, Eigen::MatrixXd& completed, std::uint64_t key);

struct ParameterSummary {
  std::string name;
  /// 1-based position within the parameter family.
  std::vector<int> index;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  /// True when the credible interval excludes zero.
  bool significant = false;
};

/// Mean and equal-tailed interval of one scalar's draws (type-7 quantiles).
ParameterSummary summarize_draws(std::string name, std::vector<int> index, std::vector<double> draws,
                                 double credibility);

/// Every free scalar of the store: zeta (pinned row skipped), lambda_light,
/// lambda_heavy, beta0, beta1, gamma. Needs at least 2 draws.
std::vector<ParameterSummary> summarize(const PosteriorStore& store, double credibility);

}  // namespace nhmm
