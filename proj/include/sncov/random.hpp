#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace sncov {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a key tuple. Used to give every (experiment, cell,
/// replication) its own stream independent of scheduling.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t v : parts) h = splitmix64(h ^ splitmix64(v));
  return h;
}

inline std::uint64_t seed_part(double v) { return std::bit_cast<std::uint64_t>(v); }

/// Deterministic random stream. mt19937_64 is fully specified by the standard
/// and the Boost ziggurat normal is header code, so draws do not depend on the
/// standard library vendor.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  RandomStream substream(std::uint64_t tag) const { return RandomStream(derive_seed({seed_, tag})); }

  double normal() { return normal_(engine_); }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// t(4) / sqrt(2): N / sqrt(chi2_4 / 4) / sqrt(2), with chi2_4 = -2 log(U1 U2).
  double std_t4() {
    const double z = normal();
    const double e = -(std::log(uniform_open0()) + std::log(uniform_open0()));
    return z / std::sqrt(e);
  }

  std::uint64_t seed() const { return seed_; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sncov
