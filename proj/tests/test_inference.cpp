#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

#include "nhmm/errors.hpp"
#include "nhmm/inference.hpp"
#include "nhmm/simulation.hpp"
#include "nhmm/store.hpp"
#include "oracles.hpp"

using namespace nhmm;
namespace fs = std::filesystem;

namespace {

SyntheticData small_data(std::uint64_t seed, long days = 150, double missing = 0.1) {
  const auto [coeffs, params] = reference_truth(2, 3, 1, 1);
  return generate_synthetic(coeffs, params, days, CovariateSpec{1, 1, 0.9}, missing, seed);
}

McmcConfig small_config(long iterations, std::uint64_t seed) {
  McmcConfig c;
  c.states = 2;
  c.iterations = iterations;
  c.burn_in_fraction = 0.2;
  c.seed = seed;
  return c;
}

bool same_store(const PosteriorStore& a, const PosteriorStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.zeta[i].zeta != b.zeta[i].zeta) return false;
    const auto& x = a.emission[i];
    const auto& y = b.emission[i];
    if (x.lambda[0] != y.lambda[0] || x.lambda[1] != y.lambda[1] || x.beta0 != y.beta0 || x.beta1 != y.beta1 ||
        x.gamma != y.gamma) {
      return false;
    }
  }
  return a.states == b.states && a.imputed == b.imputed && a.log_likelihood == b.log_likelihood &&
         a.final_state == b.final_state && a.state_counts == b.state_counts && a.missing_cells.size() == b.missing_cells.size();
}

}  // namespace

TEST_CASE("draw bookkeeping") {
  const auto data = small_data(1);
  CHECK(run_chain(data.panel, data.covariates, small_config(1, 3)).size() == 1);
  McmcConfig thin = small_config(10, 3);
  thin.thinning = 3;
  const PosteriorStore s = run_chain(data.panel, data.covariates, thin);
  CHECK(s.size() == 3);
  CHECK(s.states.size() == 3);
  CHECK(s.imputed.size() == 3);
  CHECK(s.state_counts.rowwise().sum().minCoeff() == 3);
}

TEST_CASE("chains are reproducible and independent of the thread count") {
  const auto data = small_data(2);
  McmcConfig c = small_config(40, 77);
  const PosteriorStore a = run_chain(data.panel, data.covariates, c);
  const PosteriorStore b = run_chain(data.panel, data.covariates, c);
  CHECK(same_store(a, b));
  c.threads = 3;
  CHECK(same_store(a, run_chain(data.panel, data.covariates, c)));
  c.threads = 1;
  c.seed = 78;
  CHECK_FALSE(same_store(a, run_chain(data.panel, data.covariates, c)));
}

TEST_CASE("retained draws are valid with finite log-likelihood") {
  const auto data = small_data(3);
  const PosteriorStore s = run_chain(data.panel, data.covariates, small_config(60, 5));
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::isfinite(s.log_likelihood[i]));
    CHECK_NOTHROW(s.zeta[i].validate());
    CHECK_NOTHROW(s.emission[i].validate());
    CHECK(s.states[i][0] == 0);
  }
  for (const auto& imp : s.imputed)
    for (double v : imp) CHECK(v >= 0.0);
}

TEST_CASE("store round-trips through its files") {
  const auto data = small_data(4);
  const PosteriorStore s = run_chain(data.panel, data.covariates, small_config(15, 9));
  const fs::path dir = fs::path(NHMM_TEST_TMP) / "inference_store";
  fs::remove_all(dir);
  save_store(s, dir);
  const PosteriorStore r = load_store(dir);
  CHECK(same_store(s, r));
  CHECK(r.config.seed == 9);
  CHECK(r.x_names == s.x_names);
  CHECK(r.w_scaling[0].scale == s.w_scaling[0].scale);
  CHECK(r.station_ids == s.station_ids);
}

TEST_CASE("invalid settings and shapes are rejected") {
  const auto data = small_data(5);
  McmcConfig c = small_config(5, 1);
  c.states = 0;
  CHECK_THROWS_AS(run_chain(data.panel, data.covariates, c), ConfigError);
  c = small_config(0, 1);
  CHECK_THROWS_AS(run_chain(data.panel, data.covariates, c), ConfigError);
  CovariateSet shorter = data.covariates.slice(0, 100);
  CHECK_THROWS_AS(run_chain(data.panel, shorter, small_config(5, 1)), InputError);
  CovariateSet bad = data.covariates;
  bad.x(3, 0) = std::nan("");
  CHECK_THROWS_AS(run_chain(data.panel, bad, small_config(5, 1)), InputError);
}

TEST_CASE("imputation draws from the emission at the current state") {
  const long days = 20'000;
  ObservationPanel panel = ObservationPanel::complete(Eigen::MatrixXd::Zero(days, 2));
  for (long t = 0; t < days; ++t) panel.mask(t, 0) = panel.mask(t, 1) = false;
  StateChain z{std::vector<int>(days, 0)};
  EmissionParams p(1, 2, 0);
  // Station 1 is always dry, station 2 always light rain with rate 2.
  p.beta0 << -40.0, 40.0;
  p.gamma << 1.0, 80.0;
  p.lambda[0] << 1.0, 2.0;
  p.lambda[1] << 0.1, 0.1;
  Eigen::MatrixXd completed = panel.values;
  impute_missing(panel, z, p, CovariateSet::empty(days), completed, 42);
  CHECK(completed.col(0).isZero(0.0));
  std::vector<double> v(completed.col(1).data(), completed.col(1).data() + days);
  const auto m = oracle::iid_mean(v);
  CHECK(std::abs(m.mean - 0.5) < 3.0 * m.se);

  ObservationPanel full = ObservationPanel::complete(Eigen::MatrixXd::Constant(5, 2, 1.5));
  Eigen::MatrixXd same = full.values;
  impute_missing(full, StateChain{std::vector<int>(5, 0)}, p, CovariateSet::empty(5), same, 1);
  CHECK(same == full.values);
}

TEST_CASE("summaries") {
  SECTION("constant draws") {
    const auto s = summarize_draws("c", {1}, std::vector<double>(10, 2.5), 0.95);
    CHECK(s.mean == 2.5);
    CHECK(s.lower == 2.5);
    CHECK(s.upper == 2.5);
    CHECK(s.significant);
  }
  SECTION("type-7 quantiles of 1..100") {
    std::vector<double> d(100);
    for (int i = 0; i < 100; ++i) d[i] = i + 1;
    const auto s = summarize_draws("c", {1}, d, 0.95);
    CHECK(s.lower == Catch::Approx(3.475).epsilon(1e-12));
    CHECK(s.upper == Catch::Approx(97.525).epsilon(1e-12));
    CHECK(s.mean == Catch::Approx(50.5));
  }
  SECTION("symmetric draws around zero") {
    std::vector<double> d;
    for (int i = -50; i <= 50; ++i) d.push_back(i * 0.1);
    CHECK_FALSE(summarize_draws("c", {1}, d, 0.95).significant);
  }
  SECTION("store summary needs two draws") {
    const auto data = small_data(6);
    const PosteriorStore one = run_chain(data.panel, data.covariates, small_config(1, 1));
    CHECK_THROWS_AS(summarize(one, 0.95), InputError);
    const PosteriorStore more = run_chain(data.panel, data.covariates, small_config(5, 1));
    const auto rows = summarize(more, 0.95);
    // zeta: (K-1)(K+B); lambda: 2KS; beta0: KS; beta1: AS; gamma: S.
    CHECK(rows.size() == 3 + 12 + 6 + 3 + 3);
  }
}
