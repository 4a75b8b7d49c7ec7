#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhmm/data.hpp"
#include "nhmm/emission.hpp"
#include "nhmm/transition.hpp"

namespace nhmm {

struct McmcConfig {
  int states = 2;
  /// Retained-phase sweeps; burn-in runs on top of these.
  long iterations = 2000;
  double burn_in_fraction = 0.1;
  long thinning = 1;
  std::uint64_t seed = 1;
  /// 0 leaves the OpenMP default in place.
  int threads = 0;
  bool store_states = true;
  bool store_imputed = true;

  /// Throws ConfigError for K < 1, iterations < 1, thinning < 1 or a
  /// burn-in fraction outside [0, 1).
  void validate() const;
  long burn_in() const;
  long retained() const { return iterations / thinning; }
};

struct CellIndex {
  long day = 0;
  long station = 0;
};

/// Retained MCMC draws plus what is needed to reuse them for prediction.
struct PosteriorStore {
  ModelDims dims;
  McmcConfig config;

  std::vector<TransitionCoefficients> zeta;
  std::vector<EmissionParams> emission;
  /// Full state paths; empty unless config.store_states.
  std::vector<StateChain> states;
  /// Values drawn for `missing_cells`, one vector per draw; empty unless
  /// config.store_imputed.
  std::vector<std::vector<double>> imputed;
  std::vector<CellIndex> missing_cells;
  /// State on the last training day, per draw.
  std::vector<int> final_state;
  /// Forward-recursion log-likelihood of the observed data, per draw.
  std::vector<double> log_likelihood;
  /// Visits of each state on each day over the retained draws, days x K.
  Eigen::MatrixXi state_counts;

  std::vector<std::string> station_ids;
  std::vector<std::string> x_names;
  std::vector<std::string> w_names;
  std::vector<Standardization> x_scaling;
  std::vector<Standardization> w_scaling;

  long cutpoint_retained = 0;
  long ridge_jitter = 0;

  std::size_t size() const { return zeta.size(); }
};

/// Element-wise posterior means of the coefficients, rates and cutpoints.
std::pair<TransitionCoefficients, EmissionParams> posterior_mean(const PosteriorStore& store);

/// Write one CSV per parameter family (`draw,index...,value`, 1-based) and a
/// manifest.json into `dir`, creating it if needed.
void save_store(const PosteriorStore& store, const std::filesystem::path& dir);

/// Inverse of save_store. Throws InputError on a missing or malformed file.
PosteriorStore load_store(const std::filesystem::path& dir);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace nhmm
