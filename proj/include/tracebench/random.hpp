#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace tracebench {

/// Deterministic random stream: AES-256-CTR keystream under a key derived
/// from (seed, label). Every stochastic choice in a run draws from a stream
/// forked off the scenario seed, so identical seeds give identical bytes on
/// every platform. Distributions are implemented here rather than with
/// <random> because the standard distributions are not portable bit-for-bit.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view label);

  /// Independent child stream; deterministic in (this stream's key, label).
  RandomStream fork(std::string_view label) const;

  void fill(std::span<std::uint8_t> out);
  std::vector<std::uint8_t> bytes(std::size_t n);
  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> a{};
    fill(a);
    return a;
  }

  std::uint64_t next_u64();
  /// Uniform in [0, bound) without modulo bias. bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal(double mean, double sigma);
  bool bernoulli(double p);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  explicit RandomStream(const std::array<std::uint8_t, 32>& key);
  void refill();

  std::array<std::uint8_t, 32> key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint8_t, 4096> buffer_{};
  std::size_t pos_ = buffer_.size();
};

}  // namespace tracebench
