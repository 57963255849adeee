#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace ctxprobe {

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent sub-seed from a base seed and a string key, so each
/// example/condition draws from its own stream regardless of processing order.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key);

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so bounded integers and shuffles
/// are done here by hand on top of mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return double(engine_() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ctxprobe
