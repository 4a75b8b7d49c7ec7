#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "nhmm/errors.hpp"
#include "nhmm/polya_gamma.hpp"
#include "oracles.hpp"

using nhmm::Rng;
namespace pg = nhmm::pg;

namespace {

// Mean of PG(b, z) from the weighted gamma-sum representation, summed far
// enough that the omitted tail is below 1e-7.
double series_mean(double b, double z) {
  double sum = 0.0;
  for (int k = 1; k <= 2'000'000; ++k) {
    const double d = k - 0.5;
    sum += 1.0 / (d * d + z * z / (4.0 * oracle::kPi * oracle::kPi));
  }
  return b * sum / (2.0 * oracle::kPi * oracle::kPi);
}

std::vector<double> pg_draws(double z, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = pg::draw_pg1(z, rng);
  return out;
}

}  // namespace

TEST_CASE("zero tilt draws average to the series mean") {
  const auto draws = pg_draws(0.0, 100'000, 11);
  const auto m = oracle::iid_mean(draws);
  const double expected = series_mean(1.0, 0.0);
  CHECK(expected == Catch::Approx(0.25).margin(1e-6));
  CHECK(std::abs(m.mean - expected) < 3.0 * m.se);
}

TEST_CASE("tilt two matches the closed-form mean") {
  const double closed = std::tanh(1.0) / 4.0;
  CHECK(closed == Catch::Approx(0.19040).margin(1e-5));
  CHECK(series_mean(1.0, 2.0) == Catch::Approx(closed).margin(1e-6));
  CHECK(pg::pg1_mean(2.0) == Catch::Approx(closed).epsilon(1e-14));
  const auto m = oracle::iid_mean(pg_draws(2.0, 100'000, 12));
  CHECK(std::abs(m.mean - closed) < 3.0 * m.se);
}

TEST_CASE("draws are positive and symmetric in the tilt") {
  const auto plus = pg_draws(2.0, 20'000, 21);
  const auto minus = pg_draws(-2.0, 20'000, 22);
  for (double v : plus) REQUIRE(v > 0.0);
  CHECK(oracle::ks_two_sample(plus, minus).p_value > 0.01);
}

TEST_CASE("large tilts stay finite and match the mean") {
  for (double z : {10.0, 50.0}) {
    const auto m = oracle::iid_mean(pg_draws(z, 20'000, 31));
    CHECK(std::abs(m.mean - std::tanh(z / 2.0) / (2.0 * z)) < 3.0 * m.se);
  }
}

TEST_CASE("non-finite tilt is rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(pg::draw_pg1(std::numeric_limits<double>::infinity(), rng), nhmm::InputError);
  CHECK_THROWS_AS(pg::draw_pg1(std::nan(""), rng), nhmm::InputError);
}

TEST_CASE("same seed gives the same draws") {
  CHECK(pg_draws(1.3, 500, 99) == pg_draws(1.3, 500, 99));
  CHECK(pg_draws(1.3, 500, 99) != pg_draws(1.3, 500, 100));
}

TEST_CASE("gamma-sum oracle") {
  Rng rng(5);
  SECTION("needs at least 100 terms") {
    CHECK_THROWS_AS(pg::draw_pg_gamma_sum(1.0, 0.0, 99, rng), nhmm::ConfigError);
  }
  SECTION("unit shape at zero tilt averages 1/4") {
    double sum = 0.0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) sum += pg::draw_pg_gamma_sum(1.0, 0.0, 10'000, rng);
    CHECK(std::abs(sum / n - 0.25) < 1e-3);
  }
  SECTION("shape two doubles the mean") {
    std::vector<double> v(20'000);
    for (auto& x : v) x = pg::draw_pg_gamma_sum(2.0, 0.0, 1'000, rng);
    const auto m = oracle::iid_mean(v);
    CHECK(std::abs(m.mean - 0.5) < 3.0 * m.se + 1e-4);
  }
  SECTION("agrees with the exact sampler at tilt one") {
    std::vector<double> v(10'000);
    for (auto& x : v) x = pg::draw_pg_gamma_sum(1.0, 1.0, 10'000, rng);
    CHECK(oracle::ks_two_sample(v, pg_draws(1.0, 10'000, 6)).p_value > 0.01);
  }
}
