#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace trajshap {

// SplitMix64 finalizer. Full-avalanche 64-bit mixing.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based random stream. A stream is an immutable 64-bit key; draws are
// pure functions of (key, counter), so generation order never affects values.
// Substreams derived with sub() give independent sequences per scene, frame,
// agent, query, etc., which keeps every pipeline stage reproducible and
// parallelizable at the same time.
class RngStream {
 public:
  RngStream() = default;
  static RngStream root(uint64_t seed) { return RngStream(mix64(seed ^ 0x7c5851f42d4c957fULL)); }

  RngStream sub(uint64_t id) const { return RngStream(mix64(key_ ^ mix64(id + 0x165667b19e3779f9ULL))); }

  uint64_t word(uint64_t counter) const { return mix64(key_ ^ (counter * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL)); }

  // uniform in [0, 1)
  double uniform(uint64_t counter) const { return static_cast<double>(word(counter) >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]; safe as a log() argument
  double uniform_open(uint64_t counter) const {
    return (static_cast<double>(word(counter) >> 11) + 1.0) * 0x1.0p-53;
  }

  // uniform integer in [0, bound); bound > 0
  uint64_t uniform_int(uint64_t counter, uint64_t bound) const {
    return static_cast<uint64_t>((static_cast<__uint128_t>(word(counter)) * bound) >> 64);
  }

  // Box-Muller pair of independent standard normals
  std::pair<double, double> normal_pair(uint64_t counter) const {
    const double u1 = uniform_open(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  double normal(uint64_t counter) const { return normal_pair(counter).first; }

  uint64_t key() const { return key_; }

 private:
  explicit RngStream(uint64_t key) : key_(key) {}
  uint64_t key_ = 0;
};

// Seeded Fisher-Yates; permutation depends only on the stream key.
template <typename T>
void seeded_shuffle(std::vector<T>& items, const RngStream& stream) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(stream.uniform_int(i, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace trajshap
