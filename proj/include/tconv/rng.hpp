#pragma once

#include <cstdint>
#include <limits>

namespace tconv {

/// Counter-based generator: the stream for (seed, key) is independent of how
/// many other streams were drawn before it, so per-point sampling is
/// deterministic under any work split.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t key) : state_(mix(seed ^ mix(key + 0x9e3779b97f4a7c15ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Derives a child seed so that separate purposes never share streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
  return StreamRng::mix(seed + StreamRng::mix(purpose ^ 0x632be59bd9b4e019ULL));
}

}  // namespace tconv
