#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "nhmm/emission.hpp"
#include "nhmm/errors.hpp"
#include "oracles.hpp"

using namespace nhmm;

TEST_CASE("mixing weights") {
  SECTION("huge cutpoint leaves no heavy rain") {
    const auto w = mixing_weights(0.0, 1e6);
    CHECK(w.p0 == Catch::Approx(0.5));
    CHECK(w.p1 == Catch::Approx(0.5));
    CHECK(w.p2 == 0.0);
  }
  SECTION("upper quartile cutpoint") {
    const auto w = mixing_weights(0.0, 0.6744897501960817);
    CHECK(w.p0 == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(w.p1 == Catch::Approx(0.25).epsilon(1e-12));
    CHECK(w.p2 == Catch::Approx(0.25).epsilon(1e-12));
  }
  SECTION("random arguments form a simplex point matching the CDF formula") {
    Rng rng(2);
    for (int i = 0; i < 10'000; ++i) {
      const double mu = 12.0 * rng.uniform() - 6.0;
      const double gamma = 5.0 * rng.uniform() + 1e-6;
      const auto w = mixing_weights(mu, gamma);
      REQUIRE(w.p0 >= 0.0);
      REQUIRE(w.p1 >= 0.0);
      REQUIRE(w.p2 >= 0.0);
      CHECK(std::abs(w.p0 + w.p1 + w.p2 - 1.0) < 1e-14);
      CHECK(std::abs(w.p1 - (oracle::phi_cdf(gamma - mu) - oracle::phi_cdf(-mu))) < 1e-13);
    }
  }
  SECTION("log weights stay finite in the tails") {
    for (double mu : {-40.0, -5.0, 0.3, 5.0, 40.0}) {
      const auto lw = log_mixing_weights(mu, 0.8);
      for (double v : lw) CHECK(std::isfinite(v));
      const auto w = mixing_weights(mu, 0.8);
      if (std::abs(mu) < 6.0) {
        CHECK(std::exp(lw[0]) == Catch::Approx(w.p0).epsilon(1e-12));
        CHECK(std::exp(lw[1]) == Catch::Approx(w.p1).epsilon(1e-12));
        CHECK(std::exp(lw[2]) == Catch::Approx(w.p2).epsilon(1e-12));
      }
    }
    // Asymptotic expansion of log Q(x), since Q(40.8) underflows.
    const double x = 40.8;
    const double tail = -0.5 * x * x - std::log(x * std::sqrt(2.0 * oracle::kPi)) +
                        std::log(1.0 - 1.0 / (x * x) + 3.0 / std::pow(x, 4) - 15.0 / std::pow(x, 6));
    CHECK(log_mixing_weights(-40.0, 0.8)[2] == Catch::Approx(tail).epsilon(1e-10));
  }
}

TEST_CASE("emission density") {
  const MixingWeights w{0.5, 0.3, 0.2};
  CHECK(emission_density(0.0, w, 2.0, 0.5) == 0.5);
  CHECK(emission_density(1.0, w, 2.0, 0.5) == Catch::Approx(0.3 * 2 * std::exp(-2.0) + 0.2 * 0.5 * std::exp(-0.5)));
  CHECK(emission_density(1.0, w, 2.0, 0.5) == Catch::Approx(0.14185).margin(1e-5));
  CHECK(emission_density(0.7, MixingWeights{0.0, 1.0, 0.0}, 1.0, 3.0) == Catch::Approx(std::exp(-0.7)));
  CHECK_THROWS_AS(emission_density(-0.1, w, 2.0, 0.5), InputError);

  const std::array<double, 3> lw{std::log(0.5), std::log(0.3), std::log(0.2)};
  CHECK(log_emission_density(1.0, lw, 2.0, 0.5) == Catch::Approx(std::log(emission_density(1.0, w, 2.0, 0.5))));
  CHECK(log_emission_density(0.0, lw, 2.0, 0.5) == Catch::Approx(std::log(0.5)));
}

TEST_CASE("point mass plus integrated density is one") {
  Rng rng(9);
  for (int i = 0; i < 30; ++i) {
    const double mu = 4.0 * rng.uniform() - 2.0;
    const double gamma = 3.0 * rng.uniform() + 0.05;
    const double l1 = 0.05 + 2.0 * rng.uniform();
    const double l2 = 0.01 + 0.5 * rng.uniform();
    const auto w = mixing_weights(mu, gamma);
    const double upper = 60.0 / std::min(l1, l2);
    const double mass = oracle::integrate([&](double y) { return y == 0.0 ? 0.0 : emission_density(y, w, l1, l2); },
                                          0.0, upper, 1e-14);
    // Remaining tail beyond `upper` is below exp(-60).
    CHECK(std::abs(w.p0 + mass - 1.0) < 1e-10);
  }
}

TEST_CASE("category draws") {
  Rng rng(10);
  SECTION("dry days are category 0") {
    for (int i = 0; i < 100; ++i) CHECK(sample_L(0.0, MixingWeights{0.3, 0.4, 0.3}, 1.0, 0.1, rng) == 0);
  }
  SECTION("no heavy weight means light rain") {
    for (int i = 0; i < 100; ++i) CHECK(sample_L(2.5, MixingWeights{0.3, 0.7, 0.0}, 1.0, 0.1, rng) == 1);
  }
  SECTION("normalized component densities") {
    const double a = 2.0 * std::exp(-2.0);
    const double b = 0.5 * std::exp(-0.5);
    const double p = a / (a + b);
    CHECK(p == Catch::Approx(0.4716).margin(1e-4));
    const int n = 100'000;
    int light = 0;
    for (int i = 0; i < n; ++i) light += sample_L(1.0, MixingWeights{0.2, 0.4, 0.4}, 2.0, 0.5, rng) == 1;
    CHECK(std::abs(light / double(n) - p) < 3.0 * std::sqrt(p * (1 - p) / n));
  }
  SECTION("both wet weights zero falls back to the larger component density") {
    // log(2) - 2 < log(0.5) - 0.5, so the heavy component wins.
    CHECK(sample_L(1.0, MixingWeights{1.0, 0.0, 0.0}, 2.0, 0.5, rng) == 2);
    CHECK(sample_L(0.1, MixingWeights{1.0, 0.0, 0.0}, 2.0, 0.5, rng) == 1);
  }
}

TEST_CASE("latent draws respect their region") {
  Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    CHECK(sample_M(0, 0.0, 1.0, rng) < 0.0);
    const double m = sample_M(1, 0.4, 1.3, rng);
    CHECK((m > 0.0 && m < 1.3));
    CHECK(sample_M(2, -1.0, 1.3, rng) > 1.3);
  }
  SECTION("deep tail") {
    // Mean of N(-10, 1) above 1: -10 + phi(11) / Q(11).
    const double a = 11.0;
    const double expected = -10.0 + std::exp(-0.5 * a * a) / std::sqrt(2 * oracle::kPi) / (0.5 * std::erfc(a / std::sqrt(2.0)));
    std::vector<double> v(50'000);
    for (auto& m : v) {
      m = sample_M(2, -10.0, 1.0, rng);
      REQUIRE(std::isfinite(m));
      REQUIRE(m > 1.0);
    }
    const auto s = oracle::iid_mean(v);
    CHECK(std::abs(s.mean - expected) < 3.0 * s.se);
  }
}

TEST_CASE("cutpoint draws") {
  Rng rng(13);
  SECTION("interval between the light maximum and the heavy minimum") {
    Eigen::VectorXd m(3);
    m << -1.0, 0.4, 0.9;
    Eigen::VectorXi l(3);
    l << 0, 1, 2;
    std::vector<double> v(20'000);
    for (auto& g : v) {
      g = sample_gamma_cutpoint(m, l, 0.5, 10.0, rng);
      REQUIRE((g > 0.4 && g < 0.9));
    }
    const auto s = oracle::iid_mean(v);
    CHECK(std::abs(s.mean - 0.65) < 3.0 * s.se);
  }
  SECTION("no heavy days uses the cap") {
    Eigen::VectorXd m(2);
    m << -0.2, 1.5;
    Eigen::VectorXi l(2);
    l << 0, 1;
    double hi = 0.0;
    for (int i = 0; i < 5000; ++i) {
      const double g = sample_gamma_cutpoint(m, l, 2.0, 4.0, rng);
      REQUIRE((g > 1.5 && g < 4.0));
      hi = std::max(hi, g);
    }
    CHECK(hi > 3.9);
  }
  SECTION("empty interval keeps the previous value") {
    Eigen::VectorXd m(2);
    m << 0.7, 0.7;
    Eigen::VectorXi l(2);
    l << 1, 2;
    EmissionDiagnostics diag;
    CHECK(sample_gamma_cutpoint(m, l, 0.55, 10.0, rng, &diag) == 0.55);
    CHECK(diag.cutpoint_retained == 1);
  }
}

TEST_CASE("rate draws") {
  Rng rng(14);
  const EmissionPrior prior;
  SECTION("empty cell draws from the prior") {
    std::vector<double> v(50'000);
    for (auto& x : v) x = sample_lambda(CellStats{}, prior, rng);
    const auto s = oracle::iid_mean(v);
    CHECK(std::abs(s.mean - 1.0) < 3.0 * s.se);
  }
  SECTION("conjugate update") {
    std::vector<double> v(50'000);
    for (auto& x : v) x = sample_lambda(CellStats{10, 5.0}, prior, rng);
    const auto s = oracle::iid_mean(v);
    CHECK(std::abs(s.mean - 11.0 / 6.0) < 3.0 * s.se);
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    CHECK(ss / (v.size() - 1) == Catch::Approx(11.0 / 36.0).epsilon(0.03));
  }
  SECTION("large samples concentrate on the true rate") {
    CellStats cell;
    cell.count = 100'000;
    for (long i = 0; i < cell.count; ++i) cell.total += rng.exponential() / 1.7;
    CHECK(std::abs(sample_lambda(cell, prior, rng) / 1.7 - 1.0) < 0.02);
  }
}

namespace {

CovariateSet one_w(const Eigen::MatrixXd& w) {
  CovariateSet c = CovariateSet::empty(w.rows());
  c.w.push_back(w);
  c.w_names.push_back("w1");
  c.w_scaling.push_back({});
  return c;
}

}  // namespace

TEST_CASE("coefficient draws") {
  Rng rng(15);
  const EmissionPrior flat;
  SECTION("intercept-only model") {
    const int days = 400;
    Eigen::MatrixXd latent(days, 1);
    for (int t = 0; t < days; ++t) latent(t, 0) = 0.3 + rng.normal();
    StateChain z{std::vector<int>(days, 0)};
    const CovariateSet cov = CovariateSet::empty(days);
    EmissionParams p(1, 1, 0);
    std::vector<double> v(20'000);
    for (auto& b : v) {
      sample_betas_station(0, latent, z, cov, p, flat, rng);
      b = p.beta0(0, 0);
    }
    const auto s = oracle::iid_mean(v);
    CHECK(std::abs(s.mean - latent.mean()) < 3.0 * s.se);
    double ss = 0.0;
    for (double b : v) ss += (b - s.mean) * (b - s.mean);
    CHECK(ss / (v.size() - 1) == Catch::Approx(1.0 / days).epsilon(0.03));
  }
  SECTION("known coefficients are recovered") {
    const int days = 5000;
    Eigen::MatrixXd w(days, 1);
    Eigen::MatrixXd latent(days, 1);
    StateChain z{std::vector<int>(days, 0)};
    for (int t = 0; t < days; ++t) {
      z[t] = t % 3 == 0 ? 1 : 0;
      w(t, 0) = rng.normal();
      latent(t, 0) = (z[t] == 0 ? -0.8 : 0.6) + 0.4 * w(t, 0) + rng.normal();
    }
    EmissionParams p(2, 1, 1);
    sample_betas_station(0, latent, z, one_w(w), p, flat, rng);
    // Posterior sds are about 1/sqrt(n) per coefficient.
    CHECK(std::abs(p.beta0(0, 0) + 0.8) < 3.0 / std::sqrt(days * 2.0 / 3.0));
    CHECK(std::abs(p.beta0(1, 0) - 0.6) < 3.0 / std::sqrt(days / 3.0));
    CHECK(std::abs(p.beta1(0, 0) - 0.4) < 3.0 / std::sqrt(double(days)));
  }
  SECTION("unvisited state falls back to the ridge") {
    const int days = 50;
    Eigen::MatrixXd latent = Eigen::MatrixXd::Constant(days, 1, -0.5);
    StateChain z{std::vector<int>(days, 0)};
    EmissionParams p(2, 1, 0);
    EmissionDiagnostics diag;
    sample_betas_station(0, latent, z, CovariateSet::empty(days), p, flat, rng, &diag);
    CHECK(diag.ridge_jitter == 1);
    CHECK(std::isfinite(p.beta0(1, 0)));
  }
  SECTION("an all-zero covariate carries no information") {
    const int days = 100;
    Eigen::MatrixXd latent(days, 1);
    for (int t = 0; t < days; ++t) latent(t, 0) = rng.normal();
    StateChain z{std::vector<int>(days, 0)};
    EmissionParams p(1, 1, 1);
    EmissionDiagnostics diag;
    std::vector<double> v(200);
    for (auto& b : v) {
      sample_betas_station(0, latent, z, one_w(Eigen::MatrixXd::Zero(days, 1)), p, flat, rng, &diag);
      b = p.beta1(0, 0);
    }
    const auto s = oracle::iid_mean(v);
    CHECK(s.se * std::sqrt(200.0) > 100.0);
    CHECK(std::abs(s.mean) < 3.0 * s.se);
    // With a proper prior the draw follows that prior.
    EmissionPrior unit;
    unit.beta_precision = 1.0;
    std::vector<double> u(20'000);
    for (auto& b : u) {
      sample_betas_station(0, latent, z, one_w(Eigen::MatrixXd::Zero(days, 1)), p, unit, rng);
      b = p.beta1(0, 0);
    }
    const auto su = oracle::iid_mean(u);
    CHECK(std::abs(su.mean) < 3.0 * su.se);
    CHECK(su.se * std::sqrt(20'000.0) == Catch::Approx(1.0).epsilon(0.03));
  }
}

TEST_CASE("a station update keeps the category map consistent") {
  Rng rng(16);
  const int days = 300;
  Eigen::MatrixXd y(days, 2);
  StateChain z{std::vector<int>(days, 0)};
  for (int t = 0; t < days; ++t) {
    z[t] = (t / 20) % 2;
    for (int s = 0; s < 2; ++s) y(t, s) = rng.uniform() < 0.4 ? 0.0 : rng.exponential() * (z[t] + 1);
  }
  Eigen::MatrixXd w(days, 2);
  for (int t = 0; t < days; ++t) w.row(t) << rng.normal(), rng.normal();
  const CovariateSet cov = one_w(w);
  EmissionParams p(2, 2, 1);
  ProbitLatents lat(days, 2);
  EmissionDiagnostics diag;
  for (int sweep = 0; sweep < 50; ++sweep) {
    for (int s = 0; s < 2; ++s) {
      update_station(s, y, z, cov, p, lat, EmissionPrior{}, rng, diag);
      for (int t = 0; t < days; ++t) {
        const int l = lat.category(t, s);
        const double m = lat.latent(t, s);
        REQUIRE((l == 0) == (y(t, s) == 0.0));
        if (l == 0) REQUIRE(m < 0.0);
        if (l == 1) REQUIRE((m > 0.0 && m < p.gamma[s]));
        if (l == 2) REQUIRE(m > p.gamma[s]);
      }
    }
  }
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("log table sums observed stations only") {
  ObservationPanel panel = ObservationPanel::complete((Eigen::MatrixXd(2, 2) << 0.0, 1.5, 2.0, 0.0).finished());
  panel.mask(1, 0) = false;
  EmissionParams p(2, 2, 0);
  p.beta0 << -0.3, 0.2, 0.5, 1.1;
  p.gamma << 0.7, 1.4;
  p.lambda[0] << 1.0, 2.0, 0.7, 0.9;
  p.lambda[1] << 0.1, 0.2, 0.15, 0.25;
  const Eigen::MatrixXd table = emission_log_table(panel, CovariateSet::empty(2), p);
  for (int k = 0; k < 2; ++k) {
    const double day0 = std::log(oracle::emission(0.0, p.beta0(k, 0), 0.7, p.lambda[0](k, 0), p.lambda[1](k, 0))) +
                        std::log(oracle::emission(1.5, p.beta0(k, 1), 1.4, p.lambda[0](k, 1), p.lambda[1](k, 1)));
    const double day1 = std::log(oracle::emission(0.0, p.beta0(k, 1), 1.4, p.lambda[0](k, 1), p.lambda[1](k, 1)));
    CHECK(table(0, k) == Catch::Approx(day0).epsilon(1e-12));
    CHECK(table(1, k) == Catch::Approx(day1).epsilon(1e-12));
  }
}
