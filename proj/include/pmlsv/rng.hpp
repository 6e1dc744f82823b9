#pragma once

#include <cstdint>
#include <initializer_list>

// Counter-based deterministic random streams. Every draw is a pure function
// of (key, counter), so values depend only on how a stream is keyed, never on
// the order in which other streams are consumed. Operators, noise and test
// fixtures are all reproducible from their seeds alone.

namespace pmlsv::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Collapse a seed plus an ordered list of indices/tags into one stream key.
constexpr std::uint64_t key(std::uint64_t seed,
                            std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t k = mix(seed + kGolden);
  for (std::uint64_t p : parts) k = mix(k ^ (p + kGolden));
  return k;
}

// Uniform in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Single uniform draw addressed by a fully specified key.
constexpr double unit_at(std::uint64_t key_value) noexcept {
  return to_unit(mix(key_value + kGolden));
}

class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key_value) noexcept : key_(key_value) {}

  constexpr std::uint64_t next_u64() noexcept {
    counter_ += kGolden;
    return mix(key_ + counter_);
  }

  constexpr double next_unit() noexcept { return to_unit(next_u64()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pmlsv::rng
