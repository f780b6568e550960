#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace tf4ctr {

namespace detail {

// splitmix64 step (Vigna, public domain). One full avalanche per draw keeps
// derived streams statistically independent of each other.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Deterministic counter-free generator with derivable sub-streams.
// Identical seed => bit-identical draw sequence. Sub-streams derive from the
// root seed only, so derivation order never affects the stream contents.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent sub-stream, addressable by label ("init", "shuffle", ...).
  Rng stream(std::string_view label) const {
    std::uint64_t s = seed_ ^ detail::fnv1a64(label);
    return Rng(detail::splitmix64(s));
  }

  // Indexed sub-stream (per epoch, per step, per field, ...).
  Rng stream(std::uint64_t index) const {
    std::uint64_t s = seed_ ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng(detail::splitmix64(s));
  }

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  // Uniform in [0, 1): 53 random mantissa bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in the open interval (0, 1); safe as a log argument.
  double uniform_open() { return (double(next_u64() >> 12) + 0.5) * 0x1.0p-52; }

  // Standard Gumbel(0, 1) sample: -log(-log u).
  double gumbel() { return -std::log(-std::log(uniform_open())); }

  // Unbiased integer draw in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = std::size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace tf4ctr
