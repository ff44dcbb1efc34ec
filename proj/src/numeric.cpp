#include "vshape/numeric.hpp"

namespace vshape {

MeanEstimate mean_and_std_error(std::span<const double> xs) {
  MeanEstimate out;
  out.samples = xs.size();
  if (xs.empty()) return out;
  out.mean = compensated_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  CompensatedSum sq;
  for (double x : xs) {
    const double d = x - out.mean;
    sq.add(d * d);
  }
  const double n = static_cast<double>(xs.size());
  out.std_error = std::sqrt(sq.value() / (n - 1.0) / n);
  return out;
}

}  // namespace vshape
