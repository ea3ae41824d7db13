#pragma once

// Counter-based random numbers used everywhere in behavcal.
//
// The generator is SplitMix64 viewed as a counter-based generator: output i
// of a stream keyed by `key` is mix64(key + i * 0x9E3779B97F4A7C15). Because
// every draw is a pure function of (key, counter), streams for independent
// work items are derived with `derive_seed` and results never depend on
// thread scheduling. Normal variates use the Box-Muller transform and do not
// rely on std::normal_distribution (whose algorithm varies by standard
// library).

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace behavcal {

__extension__ using uint128 = unsigned __int128;

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Stafford variant 13 finalizer, as used by SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// FNV-1a over bytes; used to turn module tags into seed material and for
// content hashes in manifests.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xCBF29CE484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Seed splitting rule: seed(root, tag, index) =
//   mix64(mix64(root ^ fnv1a64(tag)) + (index + 1) * gamma).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(root ^ fnv1a64(tag)) + (index + 1) * kGoldenGamma);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
  return mix64(mix64(root) + (index + 1) * kGoldenGamma);
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n == 0) return 0;
    for (;;) {
      const uint128 m = static_cast<uint128>((*this)()) * n;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= n || low >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Fisher-Yates; std::shuffle is implementation-defined.
template <typename Range>
void shuffle(Range& r, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(std::size(r));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    using std::swap;
    swap(r[i - 1], r[j]);
  }
}

}  // namespace behavcal
