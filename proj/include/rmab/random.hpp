#pragma once

#include <cstdint>
#include <random>

namespace rmab {

/// Named purposes for RNG streams derived from one seed.
enum class StreamTag : std::uint64_t {
  environment = 1,
  policy = 2,
  generator = 3,
  benchmark = 4,
};

/// Reproducible random stream keyed by (seed, instance, iteration, tag).
/// Uniform draws use the top 53 bits of the engine output so values are
/// identical across standard library implementations.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t instance, std::uint64_t iteration,
               StreamTag tag);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace rmab
