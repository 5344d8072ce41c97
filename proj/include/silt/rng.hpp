// Deterministic RNG used everywhere randomness is needed. splitmix64 core so
// that streams are reproducible across platforms and standard library versions
// (std::shuffle and std::uniform_*_distribution are implementation-defined).
#pragma once

#include <cstdint>
#include <vector>

#include "silt/common.hpp"

namespace silt {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Multiply-shift map of a 64-bit draw.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent substream for a named purpose; insulates consumers from each
  // other so e.g. evaluation cadence cannot perturb batch shuffling.
  Rng derive(const std::string& tag, std::uint64_t index = 0) const {
    std::uint64_t h = fnv1a64(tag);
    h = fnv1a64_bytes(&index, sizeof(index), h);
    std::uint64_t s = state_ ^ h;
    return Rng(s * 0x2545f4914f6cdd1dull + 0x9e3779b97f4a7c15ull);
  }

 private:
  std::uint64_t state_;
};

}  // namespace silt
