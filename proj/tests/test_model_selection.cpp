#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "nhmm/inference.hpp"
#include "nhmm/model_selection.hpp"
#include "nhmm/simulation.hpp"
#include "oracles.hpp"

using namespace nhmm;

namespace {

struct Instance {
  ObservationPanel panel;
  CovariateSet cov;
  TransitionCoefficients coeffs;
  EmissionParams params;
};

Instance random_instance(Rng& rng, int k, int days, int stations) {
  Instance in;
  Eigen::MatrixXd y(days, stations);
  for (int t = 0; t < days; ++t)
    for (int s = 0; s < stations; ++s) y(t, s) = rng.uniform() < 0.4 ? 0.0 : 3.0 * rng.exponential();
  in.panel = ObservationPanel::complete(y);
  for (int t = 0; t < days; ++t)
    for (int s = 0; s < stations; ++s)
      if (rng.uniform() < 0.15) in.panel.mask(t, s) = false;
  in.cov = CovariateSet::empty(days);
  in.cov.x = Eigen::MatrixXd(days, 1);
  for (int t = 0; t < days; ++t) in.cov.x(t, 0) = rng.normal();
  in.cov.x_names = {"x1"};
  in.cov.x_scaling = {{}};
  Eigen::MatrixXd w(days, stations);
  for (int t = 0; t < days; ++t)
    for (int s = 0; s < stations; ++s) w(t, s) = rng.normal();
  in.cov.w = {w};
  in.cov.w_names = {"w1"};
  in.cov.w_scaling = {{}};

  in.coeffs = TransitionCoefficients(k, 1);
  for (int j = 0; j < k - 1; ++j)
    for (int h = 0; h < k + 1; ++h) in.coeffs.zeta(j, h) = 1.5 * rng.normal();
  in.params = EmissionParams(k, stations, 1);
  for (int j = 0; j < k; ++j)
    for (int s = 0; s < stations; ++s) {
      in.params.beta0(j, s) = rng.normal();
      in.params.lambda[0](j, s) = 0.2 + rng.uniform();
      in.params.lambda[1](j, s) = 0.02 + 0.2 * rng.uniform();
    }
  for (int s = 0; s < stations; ++s) {
    in.params.beta1(0, s) = 0.5 * rng.normal();
    in.params.gamma[s] = 0.2 + 1.5 * rng.uniform();
  }
  return in;
}

double oracle_log_f(const Instance& in, int t, int k) {
  double total = 0.0;
  for (int s = 0; s < in.panel.stations(); ++s) {
    if (!in.panel.mask(t, s)) continue;
    const double mu = in.params.beta0(k, s) + in.params.beta1(0, s) * in.cov.w[0](t, s);
    total += std::log(oracle::emission(in.panel.values(t, s), mu, in.params.gamma[s], in.params.lambda[0](k, s),
                                       in.params.lambda[1](k, s)));
  }
  return total;
}

double brute_force(const Instance& in) {
  const int k = in.coeffs.states();
  const int days = static_cast<int>(in.panel.days());
  return oracle::enumerate_paths(k, days, [&](const std::vector<int>& z) {
    double lp = oracle_log_f(in, 0, z[0]);
    for (int t = 1; t < days; ++t) {
      lp += std::log(oracle::transition_prob(in.coeffs.zeta, in.cov.x.row(t).transpose(), z[t - 1], z[t]));
      lp += oracle_log_f(in, t, z[t]);
    }
    return lp;
  });
}

}  // namespace

TEST_CASE("forward recursion equals enumeration") {
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance in = random_instance(rng, 3, 7, 2);
    CHECK(std::abs(forward_log_likelihood(in.panel, in.cov, in.coeffs, in.params) - brute_force(in)) < 1e-8);
  }
}

TEST_CASE("single state sums the emission terms") {
  Rng rng(2);
  const Instance in = random_instance(rng, 1, 30, 3);
  double expected = 0.0;
  for (int t = 0; t < 30; ++t) expected += oracle_log_f(in, t, 0);
  CHECK(forward_log_likelihood(in.panel, in.cov, in.coeffs, in.params) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("duplicated and reordered stations") {
  Rng rng(3);
  const Instance in = random_instance(rng, 2, 40, 2);
  const double base = forward_log_likelihood(in.panel, in.cov, in.coeffs, in.params);

  Instance swapped = in;
  const std::vector<int> order{1, 0};
  for (int s = 0; s < 2; ++s) {
    swapped.panel.values.col(s) = in.panel.values.col(order[s]);
    swapped.panel.mask.col(s) = in.panel.mask.col(order[s]);
    swapped.cov.w[0].col(s) = in.cov.w[0].col(order[s]);
    swapped.params.beta0.col(s) = in.params.beta0.col(order[s]);
    swapped.params.beta1.col(s) = in.params.beta1.col(order[s]);
    swapped.params.gamma[s] = in.params.gamma[order[s]];
    for (int c = 0; c < 2; ++c) swapped.params.lambda[c].col(s) = in.params.lambda[c].col(order[s]);
  }
  CHECK(forward_log_likelihood(swapped.panel, swapped.cov, swapped.coeffs, swapped.params) ==
        Catch::Approx(base).epsilon(1e-12));

  // A single-state model factorizes over stations, so duplication doubles it.
  const Instance one = random_instance(rng, 1, 40, 2);
  Instance twice = one;
  auto dup = [](const auto& m) {
    std::decay_t<decltype(m)> out(m.rows(), 2 * m.cols());
    out << m, m;
    return out;
  };
  twice.panel.values = dup(one.panel.values);
  twice.panel.mask = dup(one.panel.mask);
  twice.panel.station_ids = {"a", "b", "c", "d"};
  twice.cov.w[0] = dup(one.cov.w[0]);
  twice.params.beta0 = dup(one.params.beta0);
  twice.params.beta1 = dup(one.params.beta1);
  twice.params.gamma = Eigen::VectorXd(4);
  twice.params.gamma << one.params.gamma, one.params.gamma;
  for (int c = 0; c < 2; ++c) twice.params.lambda[c] = dup(one.params.lambda[c]);
  CHECK(forward_log_likelihood(twice.panel, twice.cov, twice.coeffs, twice.params) ==
        Catch::Approx(2.0 * forward_log_likelihood(one.panel, one.cov, one.coeffs, one.params)).epsilon(1e-12));
}

TEST_CASE("parameter counts and BIC") {
  CHECK(count_parameters(7, 63, 9, 6) == 2283);
  CHECK(count_parameters(2, 63, 9, 6) == 953);
  CHECK(count_parameters(1, 63, 9, 6) == 693);
  CHECK(bic(0.0, 0, 10) == 0.0);
  CHECK(bic(-100.0, 10, 1) == Catch::Approx(200.0));
  // log n = 1 when n = e; with an integer count use the formula directly.
  CHECK(-2.0 * -100.0 + 10 * std::log(std::exp(1.0)) == Catch::Approx(210.0));
  CHECK(bic(-100.0, 10, 20) == Catch::Approx(200.0 + 10 * std::log(20.0)));
}

TEST_CASE("predictive score") {
  SECTION("single draw, one state, one station") {
    Rng rng(4);
    const Instance in = random_instance(rng, 1, 25, 1);
    PosteriorStore store;
    store.dims = ModelDims{1, 1, 1, 1, 100};
    store.zeta = {in.coeffs};
    store.emission = {in.params};
    store.final_state = {0};
    store.log_likelihood = {0.0};
    double expected = 0.0;
    for (int t = 0; t < 25; ++t) expected += oracle_log_f(in, t, 0);
    const PredictiveScore s = predictive_log_score(in.panel, store, in.cov, 7);
    CHECK(s.value == Catch::Approx(expected).epsilon(1e-12));
    CHECK(s.failed_day == -1);
  }
  SECTION("annual ratio") {
    CHECK(annual_ratio(-73.6, -77.0, 3.0) == Catch::Approx(std::exp(3.4 / 3.0)));
    CHECK(std::round(annual_ratio(-73.6, -77.0, 3.0) * 10.0) / 10.0 == 3.1);
  }
}

TEST_CASE("pair statistics") {
  const std::vector<double> a{0, 1.2, 3.4, 0, 0.5, 2.2};
  std::vector<double> reversed{6, 5, 4, 3, 2, 1};
  std::vector<double> forward{1, 2, 3, 4, 5, 6};
  CHECK(pair_statistics(a, a).spearman == Catch::Approx(1.0));
  CHECK(pair_statistics(forward, reversed).spearman == Catch::Approx(-1.0));

  // Eight matching wet/dry days and two mismatches.
  const std::vector<double> x{0, 0, 0, 1, 1, 1, 1, 1, 0, 1};
  const std::vector<double> y{0, 0, 0, 2, 2, 2, 2, 2, 3, 0};
  CHECK(pair_statistics(x, y).log_odds == Catch::Approx(std::log(4.0)));
  CHECK(pair_statistics(x, x).log_odds == kLogOddsCap);

  const double na = std::nan("");
  const std::vector<double> p{1, na, 3, 0};
  const std::vector<double> q{2, 5, na, 0};
  CHECK(pair_statistics(p, q).days == 2);
  const auto none = pair_statistics(std::vector<double>{na}, std::vector<double>{1.0});
  CHECK(std::isnan(none.log_odds));
}

TEST_CASE("scoring a fit") {
  const auto [c, e] = reference_truth(2, 3, 1, 1);
  const auto d = generate_synthetic(c, e, 400, CovariateSpec{1, 1, 0.9}, 0.05, 3);
  McmcConfig cfg;
  cfg.states = 2;
  cfg.iterations = 60;
  cfg.seed = 5;
  const auto train = d.panel.slice(0, 350);
  const auto train_cov = d.covariates.slice(0, 350);
  const auto held = d.panel.slice(350, 50);
  const auto held_cov = d.covariates.slice(350, 50);
  const PosteriorStore store = run_chain(train, train_cov, cfg);
  const ModelScore a = score_model(store, train, train_cov, &held, &held_cov, 9);
  const ModelScore b = score_model(store, train, train_cov, &held, &held_cov, 9);
  CHECK(a.param_count == count_parameters(2, 3, 1, 1));
  CHECK(a.n_observations == train.observed_count());
  CHECK(a.bic == Catch::Approx(-2.0 * a.log_likelihood + a.param_count * std::log(double(a.n_observations))));
  CHECK(a.has_pls);
  CHECK(std::isfinite(a.pls));
  CHECK(a.bic == b.bic);
  CHECK(a.pls == b.pls);
}
