#pragma once

#include <cstdint>
#include <limits>

namespace stlhr {

/// Counter-based generator: draw k of stream (seed, replicate, stream) is a
/// SplitMix64 finalizer applied to a key derived from the triple plus k.
/// Independent of evaluation order, so replicates can run in any order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace stlhr
