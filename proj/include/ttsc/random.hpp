#pragma once

// Portable randomness. std::mt19937_64 has a bit-exact output sequence
// mandated by the standard; the distribution helpers below replace the
// std:: distributions, whose algorithms are implementation-defined.

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ttsc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for child stream `index` of `seed` (repeat r, trial t, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF sampler over a fixed categorical distribution.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> probs) : cdf_(probs.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      cdf_[i] = acc;
    }
    // Guard against rounding in the running sum.
    if (!cdf_.empty()) cdf_.back() = std::max(cdf_.back(), 1.0);
  }

  std::size_t operator()(Rng& rng) const {
    const double u = uniform01(rng) * total();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::size_t>(it - cdf_.begin());
  }

  double total() const { return cdf_.empty() ? 0.0 : cdf_.back(); }
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

}  // namespace ttsc
