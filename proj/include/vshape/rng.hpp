#pragma once

#include <cstdint>
#include <random>

namespace vshape {

/// SplitMix64 finalizer; used to derive independent sub-stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of sub-stream (a, b) under a root seed.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(root) ^ a) ^ (b * 0xd1342543de82ef95ULL + 1));
}

/// mt19937_64 engine with portable variate generation: every value is a
/// fixed function of the raw 64-bit outputs, so streams reproduce across
/// standard libraries and languages.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Poisson variate by sequential inversion; means above 500 are split into
  /// chunks (sum of independent Poissons) to keep e^{-mean} representable.
  std::uint64_t poisson(double mean);
  /// Standard exponential by inversion.
  double exponential();

 private:
  std::mt19937_64 engine_;
};

}  // namespace vshape
