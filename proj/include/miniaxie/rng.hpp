#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace miniaxie {

// SplitMix64 generator. Chosen over a std engine because the whole generator
// state is a single u64 that can live inside a game state by value, and the
// derived distributions below are bit-reproducible across platforms (the
// std <random> distributions are implementation-defined).
class SplitMix64 {
 public:
  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n). Multiply-shift mapping; the 2^-64 bias is
  // irrelevant at the sample counts used here.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Consumes two draws per call so the
  // generator stays a plain value (no cached spare).
  double gaussian() {
    double u1 = uniform_double();
    double u2 = uniform_double();
    while (u1 <= 0.0) u1 = uniform_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const { return state_; }

  bool operator==(const SplitMix64&) const = default;

 private:
  std::uint64_t state_ = 0;
};

// Derives an independent stream from (seed, stream index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0xA24BAED4963EE407ull * (stream + 1)));
  return g.next();
}

template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.uniform_int(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace miniaxie
