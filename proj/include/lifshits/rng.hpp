#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace lifshits {

/// SplitMix64 finalizer. Bijective 64-bit mixing function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive combination of a running key with one more word.
constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t value) noexcept {
  return mix64(key ^ (mix64(value + 0x9e3779b97f4a7c15ULL) + 0x632be59bd9b4e019ULL + (key << 6) + (key >> 2)));
}

/// Seed of the index-th child stream of a master seed (realizations, draws).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return hash_combine(mix64(master), index);
}

/// Counter-based generator: the i-th output is mix64(key + i * golden).
///
/// Streams are addressed by a 64-bit key, so any cell or realization can be
/// regenerated without replaying the others. Satisfies
/// UniformRandomBitGenerator and can drive the <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream for one lattice cell of one realization.
CounterRng cell_stream(std::uint64_t seed, std::span<const int> cell) noexcept;

}  // namespace lifshits
