#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace anssel {

// splitmix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

// Combines a base seed and a stream index into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// xoshiro256** generator seeded from four consecutive splitmix64 outputs.
//
// Every random draw in the library goes through this class so that a given
// seed produces the same samples on every platform:
//   uniform()        (next() >> 11) * 2^-53, in [0, 1)
//   below(n)         rejection sampling, accept r >= (2^64 - n) mod n, return r mod n
//   normal()         Box-Muller cosine branch, u1 = 1 - uniform(), u2 = uniform()
//   truncated_normal redraws normal() until |z| <= 2, then scales by stddev
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  std::uint64_t below(std::uint64_t n);
  double normal();
  double truncated_normal(double stddev);

  // Fisher-Yates from the back: for i = n-1 .. 1 swap(v[i], v[below(i+1)]).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace anssel
