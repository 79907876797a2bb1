#pragma once

#include <cmath>
#include <cstdint>

namespace qla {

// SplitMix64 output function. Counter-based: the i-th output depends only on
// (state0 + i*gamma), so streams can be derived and replayed independently of
// scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stateless mix of (seed, stream) into a stream base.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (stream * 0xD1B54A32D192ED03ULL + 0x8BB84B93962EACC9ULL);
  std::uint64_t b = splitmix64(s);
  return b;
}

// Reproducible N(0,1) stream. Uniforms come from SplitMix64; normals via the
// basic Box-Muller transform so the sequence is identical on any platform
// (std::normal_distribution is implementation-defined).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(derive_stream_seed(seed, stream)) {}

  double uniform() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qla
