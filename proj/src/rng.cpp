#include "lifshits/rng.hpp"

namespace lifshits {

CounterRng cell_stream(std::uint64_t seed, std::span<const int> cell) noexcept {
  std::uint64_t key = mix64(seed ^ 0x5851f42d4c957f2dULL);
  key = hash_combine(key, cell.size());
  for (int c : cell) {
    key = hash_combine(key, static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  }
  return CounterRng(key);
}

}  // namespace lifshits
