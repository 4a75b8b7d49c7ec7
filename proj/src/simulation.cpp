#include "nhmm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nhmm/errors.hpp"

namespace nhmm {

namespace {

int draw_from_log_row(const Eigen::Ref<const Eigen::RowVectorXd>& log_row, Rng& rng) {
  double u = rng.uniform();
  const auto k_count = log_row.size();
  for (Eigen::Index k = 0; k < k_count; ++k) {
    u -= std::exp(log_row[k]);
    if (u < 0.0) return static_cast<int>(k);
  }
  for (Eigen::Index k = k_count - 1; k >= 0; --k) {
    if (std::isfinite(log_row[k])) return static_cast<int>(k);
  }
  return 0;
}

void check_simulation_inputs(const TransitionCoefficients& coeffs, const EmissionParams& params,
                             const CovariateSet& covariates) {
  coeffs.validate();
  params.validate();
  if (coeffs.states() != params.states()) throw InputError("transition and emission parameters differ in K");
  if (covariates.x_count() != coeffs.x_count()) {
    throw InputError("expected " + std::to_string(coeffs.x_count()) + " transition covariates, got " +
                     std::to_string(covariates.x_count()));
  }
  if (covariates.w_count() != params.w_count()) {
    throw InputError("expected " + std::to_string(params.w_count()) + " emission covariates, got " +
                     std::to_string(covariates.w_count()));
  }
  covariates.validate(covariates.days(), params.stations());
}

void fill_emissions(const EmissionParams& params, const CovariateSet& covariates, ForecastDraw& out, Rng& rng) {
  const Eigen::Index days = covariates.days();
  const int stations = params.stations();
  out.y_star.resize(days, stations);
  for (Eigen::Index r = 0; r < days; ++r) {
    const int z = out.z_star[static_cast<std::size_t>(r)];
    for (int s = 0; s < stations; ++s) {
      const double mu = params.beta0(z, s) + covariate_effect(params, covariates, r, s);
      out.y_star(r, s) = draw_emission(mu, params.gamma[s], params.lambda[0](z, s), params.lambda[1](z, s), rng);
    }
  }
}

}  // namespace

double draw_emission(double mu, double gamma, double lambda_light, double lambda_heavy, Rng& rng) {
  const MixingWeights w = mixing_weights(mu, gamma);
  const double u = rng.uniform();
  if (u < w.p0) return 0.0;
  const double rate = u < w.p0 + w.p1 ? lambda_light : lambda_heavy;
  return rng.exponential() / rate;
}

StateChain simulate_states(const TransitionCoefficients& coeffs, const Eigen::MatrixXd& x, int init_state, Rng& rng) {
  if (init_state < 0 || init_state >= coeffs.states()) throw InputError("initial state out of range");
  StateChain chain;
  chain.z.resize(static_cast<std::size_t>(x.rows()));
  int prev = init_state;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::MatrixXd log_q = log_transition_matrix(coeffs, x.row(r).transpose());
    prev = draw_from_log_row(log_q.row(prev), rng);
    chain[static_cast<std::size_t>(r)] = prev;
  }
  return chain;
}

ForecastDraw simulate_chain(const TransitionCoefficients& coeffs, const EmissionParams& params,
                            const CovariateSet& covariates, int init_state, Rng& rng, bool keep_q) {
  check_simulation_inputs(coeffs, params, covariates);
  if (init_state < 0 || init_state >= coeffs.states()) throw InputError("initial state out of range");
  ForecastDraw out;
  const Eigen::Index days = covariates.days();
  out.z_star.z.resize(static_cast<std::size_t>(days));
  int prev = init_state;
  for (Eigen::Index r = 0; r < days; ++r) {
    const Eigen::MatrixXd log_q = log_transition_matrix(coeffs, covariates.x.row(r).transpose());
    prev = draw_from_log_row(log_q.row(prev), rng);
    out.z_star[static_cast<std::size_t>(r)] = prev;
    if (keep_q) out.q_star.push_back(log_q.array().exp().matrix());
  }
  fill_emissions(params, covariates, out, rng);
  return out;
}

ForecastDraw simulate_in_sample(const TransitionCoefficients& coeffs, const EmissionParams& params,
                                const CovariateSet& covariates, Rng& rng) {
  check_simulation_inputs(coeffs, params, covariates);
  ForecastDraw out;
  const Eigen::Index days = covariates.days();
  out.z_star.z.assign(static_cast<std::size_t>(days), 0);
  for (Eigen::Index t = 1; t < days; ++t) {
    const Eigen::MatrixXd log_q = log_transition_matrix(coeffs, covariates.x.row(t).transpose());
    out.z_star[static_cast<std::size_t>(t)] = draw_from_log_row(log_q.row(out.z_star[static_cast<std::size_t>(t - 1)]), rng);
  }
  fill_emissions(params, covariates, out, rng);
  return out;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& q) {
  const auto k = q.rows();
  if (q.cols() != k || k < 1) throw InputError("transition matrix must be square");
  Eigen::MatrixXd a = q.transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b[k - 1] = 1.0;
  return a.fullPivLu().solve(b);
}

SyntheticData generate_synthetic(const TransitionCoefficients& coeffs, const EmissionParams& params, long days,
                                 const CovariateSpec& spec, double missing_fraction, std::uint64_t seed) {
  coeffs.validate();
  params.validate();
  if (days < 2) throw ConfigError("synthetic data needs at least 2 days");
  if (spec.x_count != coeffs.x_count() || spec.w_count != params.w_count()) {
    throw ConfigError("covariate counts do not match the parameter dimensions");
  }
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) throw ConfigError("missing fraction must lie in [0, 1)");
  if (!(std::abs(spec.autocorrelation) < 1.0)) throw ConfigError("autocorrelation must lie in (-1, 1)");

  const int stations = params.stations();
  const double phi = spec.autocorrelation;
  const double innovation = std::sqrt(1.0 - phi * phi);
  auto ar1 = [&](double* out, Rng& rng) {
    double v = rng.normal();
    for (long t = 0; t < days; ++t) {
      if (t > 0) v = phi * v + innovation * rng.normal();
      out[t] = v;
    }
  };

  SyntheticData data;
  CovariateSet& cov = data.covariates;
  Rng cov_rng(seed, {1});
  cov.x.resize(days, spec.x_count);
  for (int b = 0; b < spec.x_count; ++b) {
    ar1(cov.x.col(b).data(), cov_rng);
    cov.x_names.push_back("x" + std::to_string(b + 1));
  }
  for (int a = 0; a < spec.w_count; ++a) {
    Eigen::MatrixXd m(days, stations);
    for (int s = 0; s < stations; ++s) ar1(m.col(s).data(), cov_rng);
    cov.w.push_back(std::move(m));
    cov.w_names.push_back("w" + std::to_string(a + 1));
  }
  standardize(cov);

  Rng sim_rng(seed, {2});
  ForecastDraw sim = simulate_in_sample(coeffs, params, cov, sim_rng);
  data.states = std::move(sim.z_star);
  data.complete_values = sim.y_star;
  data.panel = ObservationPanel::complete(std::move(sim.y_star));

  const long cells = days * stations;
  const auto masked = static_cast<long>(std::llround(missing_fraction * static_cast<double>(cells)));
  std::vector<long> order(static_cast<std::size_t>(cells));
  std::iota(order.begin(), order.end(), 0L);
  Rng mask_rng(seed, {3});
  for (long i = 0; i < masked; ++i) {
    const auto j = i + static_cast<long>(mask_rng.below(static_cast<std::size_t>(cells - i)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    const long cell = order[static_cast<std::size_t>(i)];
    const long t = cell / stations;
    const long s = cell % stations;
    data.panel.mask(t, s) = false;
    data.panel.values(t, s) = 0.0;
  }
  return data;
}

std::pair<TransitionCoefficients, EmissionParams> reference_truth(int states, int stations, int w_count,
                                                                  int x_count) {
  if (states < 1 || stations < 1 || w_count < 0 || x_count < 0) throw ConfigError("invalid model dimensions");
  TransitionCoefficients coeffs(states, x_count);
  for (int to = 0; to + 1 < states; ++to) {
    for (int from = 0; from < states; ++from) coeffs.zeta(to, from) = from == to ? 2.0 : -2.0;
    for (int b = 0; b < x_count; ++b) coeffs.zeta(to, states + b) = (to % 2 == 0 ? 0.8 : -0.8) / (b + 1);
  }

  EmissionParams params(states, stations, w_count);
  for (int k = 0; k < states; ++k) {
    const double wetness = states > 1 ? static_cast<double>(k) / (states - 1) : 0.5;
    for (int s = 0; s < stations; ++s) {
      params.beta0(k, s) = -1.0 + 2.0 * wetness + 0.1 * ((s % 3) - 1);
      params.lambda[0](k, s) = 0.6 - 0.2 * wetness;
      params.lambda[1](k, s) = 0.06 - 0.02 * wetness;
    }
  }
  for (int a = 0; a < w_count; ++a) params.beta1.row(a).setConstant(0.5 / (a + 1));
  params.gamma.setConstant(0.8);
  return {coeffs, params};
}

Eigen::MatrixXd covariate_scenario_sweep(const PosteriorStore& store, const ScenarioTarget& target,
                                         ScenarioLevel level, const CovariateSet& covariates,
                                         const ScenarioOptions& options) {
  if (store.size() == 0) throw InputError("posterior store is empty");
  if (options.period < 1) throw ConfigError("scenario period must be positive");
  const Eigen::Index columns = target.emission ? covariates.w_count() : covariates.x_count();
  if (target.index < 0 || target.index >= columns) {
    throw InputError("scenario covariate index " + std::to_string(target.index + 1) + " is out of range");
  }
  if (covariates.days() < 1) throw InputError("scenario needs at least one day of covariates");

  auto kept = [&](const std::vector<std::string>& names, std::size_t i) {
    return i < names.size() && std::find(options.keep.begin(), options.keep.end(), names[i]) != options.keep.end();
  };

  CovariateSet scenario = covariates;
  for (Eigen::Index b = 0; b < scenario.x_count(); ++b) {
    if (!kept(scenario.x_names, static_cast<std::size_t>(b))) scenario.x.col(b).setZero();
  }
  for (std::size_t a = 0; a < scenario.w.size(); ++a) {
    if (!kept(scenario.w_names, a)) scenario.w[a].setZero();
  }
  const auto idx = static_cast<std::size_t>(target.index);
  const Eigen::MatrixXd& source = target.emission ? covariates.w[idx] : covariates.x;
  double pinned = 0.0;
  if (level == ScenarioLevel::Min) pinned = target.emission ? source.minCoeff() : source.col(target.index).minCoeff();
  if (level == ScenarioLevel::Max) pinned = target.emission ? source.maxCoeff() : source.col(target.index).maxCoeff();
  if (target.emission) {
    scenario.w[idx].setConstant(pinned);
  } else {
    scenario.x.col(target.index).setConstant(pinned);
  }

  const std::size_t n = store.size();
  const std::size_t used = options.max_draws == 0 ? n : std::min(n, options.max_draws);
  const Eigen::Index rows = std::min<Eigen::Index>(options.period, scenario.days());
  const Eigen::Index stations = store.dims.stations;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, stations);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(rows);
  for (std::size_t i = 0; i < used; ++i) {
    const std::size_t draw = i * n / used;
    Rng rng(options.seed, {static_cast<std::uint64_t>(draw)});
    const ForecastDraw f =
        simulate_chain(store.zeta[draw], store.emission[draw], scenario, store.final_state[draw], rng);
    for (Eigen::Index r = 0; r < f.y_star.rows(); ++r) {
      sum.row(r % options.period) += f.y_star.row(r);
      count[r % options.period] += 1.0;
    }
  }
  for (Eigen::Index r = 0; r < rows; ++r) sum.row(r) /= count[r];
  return sum;
}

}  // namespace nhmm
