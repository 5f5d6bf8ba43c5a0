#include "rmab/random.hpp"

namespace rmab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t instance, std::uint64_t iteration,
                  StreamTag tag) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ instance);
  h = splitmix64(h ^ (iteration + 0x632be59bd9b4e019ULL));
  return splitmix64(h ^ static_cast<std::uint64_t>(tag));
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t instance, std::uint64_t iteration,
                           StreamTag tag)
    : engine_(mix(seed, instance, iteration, tag)) {}

std::uint64_t RandomStream::below(std::uint64_t n) {
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

}  // namespace rmab
