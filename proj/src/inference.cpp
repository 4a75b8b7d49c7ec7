#include "nhmm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nhmm/errors.hpp"
#include "nhmm/model_selection.hpp"
#include "nhmm/states.hpp"
#include "nhmm/stats.hpp"

namespace nhmm {

namespace {

// Stream path tags within a sweep.
enum Block : std::uint64_t { kInit = 0, kEmission = 1, kStates = 2, kTransition = 3 };

void check_panel(const ObservationPanel& panel) {
  if (panel.mask.rows() != panel.values.rows() || panel.mask.cols() != panel.values.cols()) {
    throw InputError("observation mask does not match the value matrix");
  }
  if (panel.days() < 1 || panel.stations() < 1) throw InputError("observation panel is empty");
  for (Eigen::Index t = 0; t < panel.days(); ++t) {
    for (Eigen::Index s = 0; s < panel.stations(); ++s) {
      if (!panel.observed(t, s)) continue;
      const double y = panel.values(t, s);
      if (!std::isfinite(y) || y < 0.0) {
        throw InputError("invalid rainfall value on day " + std::to_string(t + 1) + " at station " +
                         std::to_string(s + 1));
      }
    }
  }
}

// Run `body(s)` for every station, in parallel when available, and rethrow
// the first failure in station order.
template <typename Body>
void for_each_station(Eigen::Index stations, Body&& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(stations));
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index s = 0; s < stations; ++s) {
    try {
      body(s);
    } catch (...) {
      errors[static_cast<std::size_t>(s)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

GibbsSampler::GibbsSampler(ObservationPanel panel, CovariateSet covariates, int states, ModelPriors priors,
                           std::uint64_t seed)
    : panel_(std::move(panel)), covariates_(std::move(covariates)), priors_(std::move(priors)), seed_(seed) {
  if (states < 1) throw ConfigError("number of states must be at least 1");
  check_panel(panel_);
  covariates_.validate(panel_.days(), panel_.stations());

  const auto days = panel_.days();
  const auto stations = panel_.stations();
  const auto b_count = static_cast<int>(covariates_.x_count());
  const auto a_count = static_cast<int>(covariates_.w_count());

  transition_prior_ = priors_.transition ? *priors_.transition : TransitionPrior::noninformative(states, b_count);
  if (transition_prior_.mean.rows() != states || transition_prior_.mean.cols() != states + b_count ||
      transition_prior_.precision.rows() != states || transition_prior_.precision.cols() != states + b_count) {
    throw ConfigError("transition prior does not match the model dimensions");
  }
  if (priors_.emission.lambda_shape <= 0.0 || priors_.emission.lambda_rate <= 0.0) {
    throw ConfigError("rate prior shape and rate must be positive");
  }
  if (priors_.emission.beta_precision < 0.0) throw ConfigError("coefficient prior precision must be non-negative");
  if (!(priors_.emission.gamma_cap > 0.0)) throw ConfigError("cutpoint cap must be positive");

  Rng init(seed_, {0, kInit});
  state_.z = initial_states(static_cast<std::size_t>(days), states, init);
  state_.coeffs = TransitionCoefficients(states, b_count);
  state_.aug = PgAugmentation(days, states);
  state_.emission = EmissionParams(states, static_cast<int>(stations), a_count);
  state_.emission.gamma.setConstant(std::min(1.0, 0.5 * priors_.emission.gamma_cap));
  state_.latents = ProbitLatents(days, stations);
  state_.completed = panel_.values;

  for (Eigen::Index s = 0; s < stations; ++s) {
    double total = 0.0;
    long wet = 0;
    for (Eigen::Index t = 0; t < days; ++t) {
      if (!panel_.observed(t, s)) {
        state_.completed(t, s) = 0.0;
      } else if (panel_.values(t, s) > 0.0) {
        total += panel_.values(t, s);
        ++wet;
      }
    }
    const double mean_wet = wet > 0 ? total / static_cast<double>(wet) : 1.0;
    state_.emission.lambda[0].col(s).setConstant(2.0 / mean_wet);
    state_.emission.lambda[1].col(s).setConstant(0.5 / mean_wet);
  }
  refresh();
}

void GibbsSampler::refresh() {
  log_q_ = log_transition_matrices(state_.coeffs, covariates_.x);
  log_f_valid_ = false;
}

void GibbsSampler::replace_observations(const Eigen::MatrixXd& values) {
  if (values.rows() != panel_.days() || values.cols() != panel_.stations()) {
    throw InputError("replacement observations have the wrong shape");
  }
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    for (Eigen::Index s = 0; s < values.cols(); ++s) {
      if (!panel_.observed(t, s)) continue;
      panel_.values(t, s) = values(t, s);
      state_.completed(t, s) = values(t, s);
    }
  }
  check_panel(panel_);
  log_f_valid_ = false;
}

void GibbsSampler::sweep() {
  const auto sweep_id = static_cast<std::uint64_t>(++sweeps_);
  const Eigen::Index stations = panel_.stations();
  auto& st = state_;

  std::vector<EmissionDiagnostics> diag(static_cast<std::size_t>(stations));
  for_each_station(stations, [&](Eigen::Index s) {
    Rng rng(seed_, {sweep_id, kEmission, static_cast<std::uint64_t>(s)});
    impute_station(s, panel_, st.z, covariates_, st.emission, st.completed, rng);
    update_station(s, st.completed, st.z, covariates_, st.emission, st.latents, priors_.emission, rng,
                   diag[static_cast<std::size_t>(s)]);
  });
  for (const auto& d : diag) diagnostics_ += d;

  log_f_ = emission_log_table(panel_, covariates_, st.emission);
  log_f_valid_ = true;
  Rng state_rng(seed_, {sweep_id, kStates});
  sweep_states(st.z, log_q_, log_f_, state_rng);

  if (st.coeffs.states() > 1) {
    const DesignMatrices design = build_design(st.z, covariates_.x, st.coeffs.states());
    Rng zeta_rng(seed_, {sweep_id, kTransition});
    sample_zeta(design, st.coeffs, st.aug, transition_prior_, zeta_rng);
    log_q_ = log_transition_matrices(st.coeffs, covariates_.x);
  }
}

double GibbsSampler::log_likelihood() const {
  if (!log_f_valid_) {
    return forward_log_likelihood(log_q_, emission_log_table(panel_, covariates_, state_.emission));
  }
  return forward_log_likelihood(log_q_, log_f_);
}

void impute_missing(const ObservationPanel& panel, const StateChain& states, const EmissionParams& params,
                    const CovariateSet& covariates, Eigen::MatrixXd& completed, std::uint64_t key) {
  for_each_station(panel.stations(), [&](Eigen::Index s) {
    Rng rng(key, {static_cast<std::uint64_t>(s)});
    impute_station(s, panel, states, covariates, params, completed, rng);
  });
}

void set_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

PosteriorStore run_chain(const ObservationPanel& panel, const CovariateSet& covariates, const McmcConfig& config,
                         const ModelPriors& priors, const ProgressFn& progress) {
  config.validate();
  set_threads(config.threads);
  GibbsSampler sampler(panel, covariates, config.states, priors, config.seed);

  PosteriorStore store;
  store.dims = dims_of(panel, covariates, config.states);
  store.config = config;
  store.station_ids = panel.station_ids;
  store.x_names = covariates.x_names;
  store.w_names = covariates.w_names;
  store.x_scaling = covariates.x_scaling;
  store.w_scaling = covariates.w_scaling;
  store.state_counts = Eigen::MatrixXi::Zero(panel.days(), config.states);
  for (Eigen::Index t = 0; t < panel.days(); ++t) {
    for (Eigen::Index s = 0; s < panel.stations(); ++s) {
      if (!panel.observed(t, s)) store.missing_cells.push_back({static_cast<long>(t), static_cast<long>(s)});
    }
  }

  const long burn = config.burn_in();
  const long total = burn + config.iterations;
  const auto retained = static_cast<std::size_t>(config.retained());
  store.zeta.reserve(retained);
  store.emission.reserve(retained);
  store.log_likelihood.reserve(retained);
  store.final_state.reserve(retained);

  for (long i = 1; i <= total; ++i) {
    sampler.sweep();
    if (i > burn && (i - burn) % config.thinning == 0) {
      const ChainState& st = sampler.state();
      store.zeta.push_back(st.coeffs);
      store.emission.push_back(st.emission);
      store.final_state.push_back(st.z.z.back());
      store.log_likelihood.push_back(sampler.log_likelihood());
      for (std::size_t t = 0; t < st.z.size(); ++t) ++store.state_counts(static_cast<Eigen::Index>(t), st.z[t]);
      if (config.store_states) store.states.push_back(st.z);
      if (config.store_imputed) {
        std::vector<double> values;
        values.reserve(store.missing_cells.size());
        for (const auto& c : store.missing_cells) values.push_back(st.completed(c.day, c.station));
        store.imputed.push_back(std::move(values));
      }
    }
    if (progress) progress(i, total);
  }
  store.cutpoint_retained = sampler.diagnostics().cutpoint_retained;
  store.ridge_jitter = sampler.diagnostics().ridge_jitter;
  return store;
}

ParameterSummary summarize_draws(std::string name, std::vector<int> index, std::vector<double> draws,
                                 double credibility) {
  if (draws.empty()) throw InputError("no draws to summarize");
  if (!(credibility > 0.0 && credibility < 1.0)) throw ConfigError("credibility must lie in (0, 1)");
  ParameterSummary out;
  out.name = std::move(name);
  out.index = std::move(index);
  out.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
  std::sort(draws.begin(), draws.end());
  const double tail = 0.5 * (1.0 - credibility);
  out.lower = quantile_sorted(draws, tail);
  out.upper = quantile_sorted(draws, 1.0 - tail);
  out.significant = out.lower > 0.0 || out.upper < 0.0;
  return out;
}

std::vector<ParameterSummary> summarize(const PosteriorStore& store, double credibility) {
  if (store.size() < 2) throw InputError("summaries need at least 2 retained draws");
  const auto n = store.size();
  std::vector<ParameterSummary> out;
  std::vector<double> buf(n);

  auto emit = [&](const std::string& name, std::vector<int> index, auto&& get) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = get(i);
    out.push_back(summarize_draws(name, std::move(index), buf, credibility));
  };

  const auto& d = store.dims;
  for (int k = 0; k < d.states - 1; ++k) {
    for (int j = 0; j < d.states + d.x_count; ++j) {
      emit("zeta", {k + 1, j + 1}, [&](std::size_t i) { return store.zeta[i].zeta(k, j); });
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < d.states; ++k) {
      for (int s = 0; s < d.stations; ++s) {
        emit(c == 0 ? "lambda_light" : "lambda_heavy", {k + 1, s + 1},
             [&](std::size_t i) { return store.emission[i].lambda[static_cast<std::size_t>(c)](k, s); });
      }
    }
  }
  for (int k = 0; k < d.states; ++k) {
    for (int s = 0; s < d.stations; ++s) {
      emit("beta0", {k + 1, s + 1}, [&](std::size_t i) { return store.emission[i].beta0(k, s); });
    }
  }
  for (int a = 0; a < d.w_count; ++a) {
    for (int s = 0; s < d.stations; ++s) {
      emit("beta1", {a + 1, s + 1}, [&](std::size_t i) { return store.emission[i].beta1(a, s); });
    }
  }
  for (int s = 0; s < d.stations; ++s) {
    emit("gamma", {s + 1}, [&](std::size_t i) { return store.emission[i].gamma[s]; });
  }
  return out;
}

}  // namespace nhmm
