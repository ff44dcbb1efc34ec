#include "vshape/rng.hpp"

#include <cmath>

#include "vshape/errors.hpp"

namespace vshape {

std::uint64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be finite and >= 0");
  constexpr double kChunk = 500.0;
  std::uint64_t count = 0;
  while (mean > 0.0) {
    const double part = mean > kChunk ? kChunk : mean;
    mean -= part;
    double p = std::exp(-part);
    double cdf = p;
    const double u = uniform();
    std::uint64_t n = 0;
    // Guard against cdf stalling just below u from rounding.
    while (u > cdf && p > 0.0) {
      ++n;
      p *= part / static_cast<double>(n);
      cdf += p;
    }
    count += n;
  }
  return count;
}

double Rng::exponential() { return -std::log1p(-uniform()); }

}  // namespace vshape
