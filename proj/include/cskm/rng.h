#ifndef CSKM_RNG_H_
#define CSKM_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>

namespace cskm {

// Seeded generator whose draws are identical on every platform. The standard
// distributions are implementation-defined, so bounded draws are done here by
// rejection on the raw 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cskm

#endif  // CSKM_RNG_H_
