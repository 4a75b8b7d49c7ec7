#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace nhmm {

/// xoshiro256++ engine seeded through splitmix64.
///
/// A stream is addressed by a root seed plus a path of integers
/// (e.g. {sweep, purpose, station}). Work that is split across threads takes
/// its stream from the path rather than from a shared generator, so results do
/// not depend on the thread count or on scheduling order.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Exponential with rate 1.
  double exponential();
  /// Gamma(shape, rate).
  double gamma(double shape, double rate);
  /// Index in [0, n).
  std::size_t below(std::size_t n);
  /// Draw a fresh key for deriving child streams.
  std::uint64_t key() { return (*this)(); }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Mixing step of splitmix64; also used to fold stream paths into seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace nhmm
