#pragma once

#include <cstdint>
#include <random>

namespace wdpg {

/// SplitMix64 finalizer. Used only for seed derivation, never as a stream.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: seed = mix(mix(mix(master) ^ tag) ^ index).
/// Distinct (tag, index) pairs give unrelated streams under one master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index);
}

/// Well-known subtask tags for derive_seed.
namespace stream_tag {
inline constexpr std::uint64_t kTrain = 0x7472;
inline constexpr std::uint64_t kEval = 0x6576;
inline constexpr std::uint64_t kBatch = 0x6261;
inline constexpr std::uint64_t kBootstrap = 0x6273;
inline constexpr std::uint64_t kOracle = 0x6f72;
inline constexpr std::uint64_t kSeed = 0x7364;
}  // namespace stream_tag

/// A single random stream. Not thread-safe; each worker owns its own.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

  double normal() { return normal_(engine_); }

  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace wdpg
