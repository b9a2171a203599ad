#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "freqguide/tensor.hpp"

namespace freqguide {

/// Seeded random source.
///
/// The engine is std::mt19937_64. A substream keyed by (label, index) is
/// seeded with splitmix64(seed ^ fnv1a64(label) ^ splitmix64(index)), so it
/// depends only on the root seed and its key, never on how much of another
/// stream was consumed. Normal deviates use Box-Muller on 53-bit uniforms,
/// which keeps the stream identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  Rng substream(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// i.i.d. standard normal entries.
ImageTensor gaussian_noise(Rng& rng, Shape shape);

}  // namespace freqguide
