#pragma once

// Deterministic, platform-independent randomness for resampling tests and
// seeded augmentation. std::uniform_int_distribution is implementation
// defined, so bounded draws are done with Lemire's multiply-shift rejection
// over a splitmix64 stream. Substreams derive from (seed, tag, index) so
// replicates can run in any order or in parallel.

#include <cstdint>
#include <utility>
#include <vector>

namespace jeval {

inline constexpr const char* kRngAlgorithm = "splitmix64+lemire";

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform draw in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool coin() { return (next() & 1ull) != 0; }

 private:
  std::uint64_t state_;
};

// One splitmix64 scrambling step; used to mix seeds with stream tags.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  return mix64(mix64(seed ^ mix64(tag)) ^ index);
}

// Stream tags (arbitrary fixed constants, one per consumer).
inline constexpr std::uint64_t kStreamBootstrap = 0xB0075751ull;
inline constexpr std::uint64_t kStreamPermutation = 0x5EA77E57ull;
inline constexpr std::uint64_t kStreamSwapNegatives = 0x54A9AE65ull;
inline constexpr std::uint64_t kStreamParaphrase = 0x9A4A9B4Aull;
inline constexpr std::uint64_t kStreamExportSplit = 0xE49047EDull;

template <typename T>
void seeded_shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// First k slots of a Fisher-Yates pass: a uniform k-subset, in draw order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                           std::size_t k,
                                                           SplitMix64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k && i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k < n ? k : n);
  return idx;
}

}  // namespace jeval
