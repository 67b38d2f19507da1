#pragma once

#include <cstdint>
#include <vector>

namespace mornmt {

// Deterministic splitmix64 generator. Used everywhere instead of the
// std:: distributions so that artifacts are byte-identical for a given
// seed regardless of standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) from the top 53 bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Unbiased integer in [0,n) via rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~0ULL - ~0ULL % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Independent child stream; deterministic in (current state, key).
  Rng fork(std::uint64_t key) const {
    Rng r(state_ ^ (0x9e3779b97f4a7c15ULL * (key + 1)));
    r.next_u64();
    return r;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace mornmt
