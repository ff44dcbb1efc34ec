#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vshape::detail {

// Per-interval closed form of the top-k recurrence on the normalized unit
// interval, with normalized masses b (feed) and c (broadcaster), a = b + c:
//
//   f_j(u) = e^{-a u} sum_{i<j} w_i d_{j-i} u^i + beta_j,
//   w_i = b^i / i!,  d_l = h_l - beta_l,  beta_l = 1 - (b/a)^l.
//
// Arrays indexed by the rank l are 1-based with slot 0 fixed at zero so the
// formulas can be read off directly. The a = 0 limit uses beta_l = 1, which
// reproduces the frozen solution f_j = h_j.
class IntervalKernel {
 public:
  explicit IntervalKernel(std::size_t k);

  std::size_t k() const noexcept { return k_; }

  /// Loads one interval. Computes moments J_0..J_k when `with_gradient_moments`
  /// (J_k is only needed by the c-derivative), else J_0..J_{k-1}.
  void prepare(double b, double c, bool with_gradient_moments = false);

  double a() const noexcept { return a_; }
  double decay() const noexcept { return decay_; }
  double beta(std::size_t l) const noexcept { return beta_[l]; }
  double weight(std::size_t i) const noexcept { return weight_[i]; }
  double moment(std::size_t i) const noexcept { return moment_[i]; }

  /// Exit values y_1..y_k from entry values h_1..h_k; returns the integral of
  /// f_k over the unit interval.
  double step(std::span<const double> entry, std::span<double> exit) const;

  /// Partial derivatives of the exit vector and of the integral of f_k.
  /// dexit_dentry is row-major k x k (row j, column l, both 0-based).
  void sensitivity(std::span<const double> entry, std::span<double> dexit_dentry,
                   std::span<double> dexit_dc, std::span<double> dintegral_dentry,
                   double& dintegral_dc) const;

 private:
  std::size_t k_;
  double b_ = 0.0;
  double c_ = 0.0;
  double a_ = 0.0;
  double decay_ = 1.0;
  std::vector<double> beta_;     // beta_[l], l = 0..k
  std::vector<double> dbeta_;    // d beta_l / dc
  std::vector<double> rpow_;     // (b/a)^l
  std::vector<double> weight_;   // b^i / i!, i = 0..k
  std::vector<double> moment_;   // J_i = int_0^1 t^i e^{-a t} dt, i = 0..k
};

}  // namespace vshape::detail
