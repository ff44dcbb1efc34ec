#include "vshape/detail/interval_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "vshape/errors.hpp"
#include "vshape/visibility.hpp"

namespace vshape::detail {

namespace {
// e^{-a} is treated as exactly zero beyond this mass; the trajectory then
// sits on its asymptote beta at the interval end.
constexpr double kUnderflowMass = 700.0;
}  // namespace

IntervalKernel::IntervalKernel(std::size_t k)
    : k_(k),
      beta_(k + 1, 0.0),
      dbeta_(k + 1, 0.0),
      rpow_(k + 1, 0.0),
      weight_(k + 1, 0.0),
      moment_(k + 1, 0.0) {
  if (k == 0) throw DomainError("rank threshold k must be at least 1");
}

void IntervalKernel::prepare(double b, double c, bool with_gradient_moments) {
  if (!(b >= 0.0) || !(c >= 0.0) || !std::isfinite(b) || !std::isfinite(c)) {
    throw DomainError("interval masses must be finite and nonnegative");
  }
  b_ = b;
  c_ = c;
  a_ = b + c;
  decay_ = a_ > kUnderflowMass ? 0.0 : std::exp(-a_);

  rpow_[0] = 1.0;
  if (b == 0.0) {
    // Covers a = 0 as the c -> 0+ limit with b = 0.
    for (std::size_t l = 1; l <= k_; ++l) {
      rpow_[l] = 0.0;
      beta_[l] = 1.0;
      dbeta_[l] = 0.0;
    }
  } else {
    const double log_ratio = std::log1p(-c / a_);
    for (std::size_t l = 1; l <= k_; ++l) {
      const double x = static_cast<double>(l) * log_ratio;
      rpow_[l] = std::exp(x);
      beta_[l] = -std::expm1(x);
      dbeta_[l] = static_cast<double>(l) * rpow_[l] / a_;
    }
  }

  weight_[0] = 1.0;
  for (std::size_t i = 1; i <= k_; ++i) weight_[i] = weight_[i - 1] * b / static_cast<double>(i);

  const std::size_t top = with_gradient_moments ? k_ : k_ - 1;
  for (std::size_t i = 0; i <= top; ++i) moment_[i] = exp_moment(static_cast<unsigned>(i), a_);
}

double IntervalKernel::step(std::span<const double> entry, std::span<double> exit) const {
  for (std::size_t j = 1; j <= k_; ++j) {
    double poly = 0.0;
    for (std::size_t i = 0; i < j; ++i) poly += weight_[i] * (entry[j - i - 1] - beta_[j - i]);
    // f_j >= f_{j-1} holds exactly; rounding can break it by an ulp.
    const double floor = j > 1 ? exit[j - 2] : 0.0;
    exit[j - 1] = std::clamp(decay_ * poly + beta_[j], floor, 1.0);
  }
  double integral = beta_[k_];
  for (std::size_t i = 0; i < k_; ++i) {
    integral += weight_[i] * (entry[k_ - i - 1] - beta_[k_ - i]) * moment_[i];
  }
  return std::max(integral, 0.0);
}

void IntervalKernel::sensitivity(std::span<const double> entry, std::span<double> dexit_dentry,
                                 std::span<double> dexit_dc, std::span<double> dintegral_dentry,
                                 double& dintegral_dc) const {
  const std::size_t k = k_;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t l = 0; l < k; ++l) {
      dexit_dentry[j * k + l] = l <= j ? decay_ * weight_[j - l] : 0.0;
    }
  }
  for (std::size_t q = 1; q <= k; ++q) {
    double transient = 0.0;
    for (std::size_t i = 0; i < q; ++i) transient += weight_[i] * (entry[q - i - 1] - beta_[q - i]);
    for (std::size_t i = 1; i < q; ++i) transient += weight_[i] * dbeta_[q - i];
    dexit_dc[q - 1] = static_cast<double>(q) * rpow_[q] * moment_[0] - decay_ * transient;
  }
  for (std::size_t l = 1; l <= k; ++l) dintegral_dentry[l - 1] = weight_[k - l] * moment_[k - l];

  double d = static_cast<double>(k) * rpow_[k] * (moment_[0] - moment_[1]);
  for (std::size_t i = 1; i < k; ++i) d -= weight_[i] * dbeta_[k - i] * moment_[i];
  for (std::size_t i = 0; i < k; ++i) {
    d -= weight_[i] * (entry[k - i - 1] - beta_[k - i]) * moment_[i + 1];
  }
  dintegral_dc = d;
}

}  // namespace vshape::detail
