#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace krrd {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s ^= 0x9e3779b97f4a7c15ull * (b + 1);
  h ^= splitmix64(s) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

/// mt19937_64 stream with a hand-rolled Box-Muller sampler. std::normal_distribution
/// is implementation-defined, which would break the byte-identical-rerun contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on (0, 1).
  double uniform() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Stream for one replication, derived by hashing so replication sets are
/// order-independent and safe to run concurrently.
inline Rng replication_stream(std::uint64_t master_seed, std::uint64_t replication) {
  return Rng(hash_combine(master_seed, replication));
}

}  // namespace krrd
