#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace vshape {

/// Neumaier-compensated accumulator. Sums in a fixed index order so that
/// results do not depend on how the addends were produced.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

/// Mean and standard error of the mean (sample std / sqrt(n)).
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

MeanEstimate mean_and_std_error(std::span<const double> xs);

}  // namespace vshape
