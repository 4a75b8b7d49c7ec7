#include "nhmm/model_selection.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "nhmm/errors.hpp"
#include "nhmm/simulation.hpp"
#include "nhmm/stats.hpp"

namespace nhmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp_vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return log_sum_exp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace

double forward_log_likelihood(const std::vector<Eigen::MatrixXd>& log_q, const Eigen::MatrixXd& log_f) {
  const Eigen::Index days = log_f.rows();
  const Eigen::Index k_count = log_f.cols();
  if (static_cast<Eigen::Index>(log_q.size()) != days) throw InputError("transition and emission tables differ in length");
  if (days == 0) return 0.0;

  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(k_count, kNegInf);
  alpha[0] = log_f(0, 0);
  double total = 0.0;
  Eigen::VectorXd next(k_count);
  Eigen::VectorXd terms(k_count);
  for (Eigen::Index t = 0;; ++t) {
    const double norm = log_sum_exp_vec(alpha);
    if (!std::isfinite(norm)) return kNegInf;
    total += norm;
    alpha.array() -= norm;
    if (t + 1 == days) break;
    const Eigen::MatrixXd& q = log_q[static_cast<std::size_t>(t + 1)];
    for (Eigen::Index j = 0; j < k_count; ++j) {
      for (Eigen::Index i = 0; i < k_count; ++i) terms[i] = alpha[i] + q(i, j);
      next[j] = log_sum_exp_vec(terms) + log_f(t + 1, j);
    }
    alpha.swap(next);
  }
  return total;
}

double forward_log_likelihood(const ObservationPanel& panel, const CovariateSet& covariates,
                              const TransitionCoefficients& coeffs, const EmissionParams& params) {
  covariates.validate(panel.days(), panel.stations());
  if (coeffs.states() != params.states()) throw InputError("transition and emission parameters differ in K");
  if (params.stations() != panel.stations()) throw InputError("emission parameters do not match the station count");
  return forward_log_likelihood(log_transition_matrices(coeffs, covariates.x),
                                emission_log_table(panel, covariates, params));
}

long count_parameters(int states, int stations, int w_count, int x_count) {
  if (states < 1) throw ConfigError("number of states must be at least 1");
  const long k = states;
  const long s = stations;
  return k * (k - 1) + x_count * (k - 1) + k * s + w_count * s + (k - 2) * s + 2 * s * k;
}

double bic(double log_likelihood, long param_count, long n_observations) {
  if (n_observations < 1) throw InputError("BIC needs at least one observation");
  return -2.0 * log_likelihood + static_cast<double>(param_count) * std::log(static_cast<double>(n_observations));
}

PredictiveScore predictive_log_score(const ObservationPanel& held_out, const PosteriorStore& store,
                                     const CovariateSet& covariates, std::uint64_t seed) {
  if (store.size() == 0) throw InputError("posterior store is empty");
  if (held_out.stations() != store.dims.stations) throw InputError("held-out panel has the wrong station count");
  covariates.validate(held_out.days(), held_out.stations());

  const Eigen::Index days = held_out.days();
  const Eigen::Index stations = held_out.stations();
  const auto n = static_cast<Eigen::Index>(store.size());
  Eigen::MatrixXd log_prod(days, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index d = 0; d < n; ++d) {
    try {
      const auto& coeffs = store.zeta[static_cast<std::size_t>(d)];
      const auto& params = store.emission[static_cast<std::size_t>(d)];
      Rng rng(seed, {static_cast<std::uint64_t>(d)});
      const StateChain path =
          simulate_states(coeffs, covariates.x, store.final_state[static_cast<std::size_t>(d)], rng);
      for (Eigen::Index r = 0; r < days; ++r) {
        const int z = path[static_cast<std::size_t>(r)];
        double acc = 0.0;
        for (Eigen::Index s = 0; s < stations; ++s) {
          if (!held_out.observed(r, s)) continue;
          const double mu = params.beta0(z, s) + covariate_effect(params, covariates, r, s);
          acc += log_emission_density(held_out.values(r, s), log_mixing_weights(mu, params.gamma[s]),
                                      params.lambda[0](z, s), params.lambda[1](z, s));
        }
        log_prod(r, d) = acc;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(d)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PredictiveScore score;
  const double log_n = std::log(static_cast<double>(n));
  for (Eigen::Index r = 0; r < days; ++r) {
    const double day = log_sum_exp_vec(log_prod.row(r).transpose()) - log_n;
    if (!std::isfinite(day)) {
      score.value = kNegInf;
      score.failed_day = static_cast<long>(r);
      return score;
    }
    score.value += day;
  }
  return score;
}

double annual_ratio(double pls_a, double pls_b, double years) {
  if (!(years > 0.0)) throw InputError("years must be positive");
  return std::exp((pls_a - pls_b) / years);
}

PairStatistics pair_statistics(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("series differ in length");
  std::vector<double> xa;
  std::vector<double> xb;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (std::isnan(a[t]) || std::isnan(b[t])) continue;
    xa.push_back(a[t]);
    xb.push_back(b[t]);
  }
  PairStatistics out;
  out.days = static_cast<long>(xa.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (xa.empty()) {
    out.log_odds = nan;
    out.spearman = nan;
    return out;
  }

  long matched = 0;
  for (std::size_t t = 0; t < xa.size(); ++t) matched += (xa[t] > 0.0) == (xb[t] > 0.0) ? 1 : 0;
  const long mismatched = out.days - matched;
  if (mismatched == 0) {
    out.log_odds = kLogOddsCap;
  } else if (matched == 0) {
    out.log_odds = -kLogOddsCap;
  } else {
    out.log_odds = std::log(static_cast<double>(matched) / static_cast<double>(mismatched));
  }

  const std::vector<double> ra = average_ranks(xa);
  const std::vector<double> rb = average_ranks(xb);
  const auto m = static_cast<double>(ra.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= m;
  mb /= m;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  out.spearman = saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : nan;
  return out;
}

std::vector<SpatialDiagnostic> spatial_diagnostics(const ObservationPanel& first, const ObservationPanel& second) {
  if (first.days() != second.days() || first.stations() != second.stations()) {
    throw InputError("panels must have the same shape");
  }
  auto series = [](const ObservationPanel& p, Eigen::Index s) {
    std::vector<double> v(static_cast<std::size_t>(p.days()));
    for (Eigen::Index t = 0; t < p.days(); ++t) {
      v[static_cast<std::size_t>(t)] = p.observed(t, s) ? p.values(t, s) : std::numeric_limits<double>::quiet_NaN();
    }
    return v;
  };
  std::vector<SpatialDiagnostic> out;
  for (Eigen::Index i = 0; i < first.stations(); ++i) {
    const auto fi = series(first, i);
    const auto si = series(second, i);
    for (Eigen::Index j = i + 1; j < first.stations(); ++j) {
      SpatialDiagnostic d;
      d.station_i = static_cast<int>(i);
      d.station_j = static_cast<int>(j);
      d.first = pair_statistics(fi, series(first, j));
      d.second = pair_statistics(si, series(second, j));
      out.push_back(d);
    }
  }
  return out;
}

ModelScore score_model(const PosteriorStore& store, const ObservationPanel& train, const CovariateSet& train_cov,
                       const ObservationPanel* held_out, const CovariateSet* held_cov, std::uint64_t seed) {
  const auto [coeffs, params] = posterior_mean(store);
  ModelScore score;
  score.states = store.dims.states;
  score.param_count = count_parameters(store.dims.states, store.dims.stations, store.dims.w_count, store.dims.x_count);
  score.log_likelihood = forward_log_likelihood(train, train_cov, coeffs, params);
  score.n_observations = train.observed_count();
  score.bic = bic(score.log_likelihood, score.param_count, score.n_observations);
  score.seed = seed;
  if (held_out && held_cov) {
    const PredictiveScore pls = predictive_log_score(*held_out, store, *held_cov, seed);
    score.pls = pls.value;
    score.has_pls = true;
  }
  return score;
}

}  // namespace nhmm
