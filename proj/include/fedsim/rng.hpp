#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fedsim {

// Splittable counter-style PRNG built on the splitmix64 finalizer. The standard
// library engines/distributions are implementation-defined, so everything that
// touches randomness goes through this header to keep traces bit-reproducible.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

// Purpose tags keep the per-round streams disjoint: a run consumes randomness
// only through (seed, round, purpose, index) coordinates, never a shared
// sequential state. SFL and PFL therefore see identical permutation and noise
// streams for the same seed, which is what makes their comparison meaningful.
enum class StreamPurpose : std::uint64_t {
  permutation = 1,  // client order / participation selection
  noise = 2,        // gradient noise, indexed by global client id
  class_alloc = 3,  // partitioner: class ownership shuffles
  dirichlet = 4,    // partitioner: per-class proportion draws
  shuffle = 5,      // partitioner: per-class sample shuffles
  seeds = 6,        // harness: per-run seeds from a master seed
  init = 7,         // reserved for randomized starting points
};

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t round,
                                   StreamPurpose purpose, std::uint64_t index) {
  std::uint64_t h = mix64(seed ^ kGolden);
  h = mix64(h ^ (round + 1) * kGolden);
  h = mix64(h ^ static_cast<std::uint64_t>(purpose) * kGolden);
  h = mix64(h ^ (index + 1) * kGolden);
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

  // uniform in [0, 1) resp. (0, 1], 53-bit resolution
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double unit_pos() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  // unbiased integer in [0, n) by rejection
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t v = next();
      if (v >= threshold) return v % n;
    }
  }

  // Box-Muller without the cached spare, so every gaussian costs exactly two
  // uniforms and the draw count stays position-independent.
  double gaussian() {
    const double u1 = unit_pos();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Marsaglia-Tsang gamma sampler (shape alpha, unit scale); the alpha < 1 case
// uses the standard power-of-uniform boost.
inline double gamma_draw(Rng& rng, double alpha) {
  if (alpha < 1.0) {
    const double u = rng.unit_pos();
    return gamma_draw(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.unit_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace fedsim
