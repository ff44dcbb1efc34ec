#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vshape/intensity.hpp"

namespace vshape {

/// Upper incomplete gamma for integer order n >= 1 via the finite sum
/// Gamma(n, x) = (n-1)! e^{-x} sum_{i<n} x^i / i!.
double upper_gamma_int(unsigned n, double x);

/// int_0^1 t^i e^{-a t} dt for a >= 0, accurate for small and large a.
double exp_moment(unsigned i, double a);

/// Closed-form top-k probabilities on one interval, in normalized time
/// u in [0, 1].
struct IntervalSolution {
  std::size_t index = 0;
  double feed_mass = 0.0;         // b~ = b_m * width
  double broadcast_mass = 0.0;    // c~ = c_m * width
  std::vector<double> entry;      // h_1..h_k at the interval start
  std::vector<double> alpha;      // alpha_{0..k-1, k}
  std::vector<double> beta;       // beta_1..beta_k
  std::vector<double> exit;       // f_1..f_k at the interval end
  double integral = 0.0;          // int_0^1 f_k(u) du

  std::size_t k() const noexcept { return entry.size(); }
  /// f_k(u).
  double value(double u) const;
  /// d f_k / du, from the polynomial-times-exponential form.
  double derivative(double u) const;
};

IntervalSolution interval_coefficients(double feed_mass, double broadcast_mass,
                                       std::span<const double> entry, std::size_t index = 0);

/// Chains intervals from f_j(0) = 0; interval m uses c~ = lambda_m * width,
/// b~ = mu_m * width.
std::vector<IntervalSolution> fk_trajectory(const PiecewiseConstantFn& lambda,
                                            const PiecewiseConstantFn& mu, std::size_t k);

/// f_k at physical time t in [0, T].
double trajectory_value(const std::vector<IntervalSolution>& trajectory, const TimeGrid& grid,
                        double t);

struct VisibilityValue {
  std::size_t k = 1;
  double value = 0.0;
  std::vector<double> contributions;  // one per piece; value is their sum
};

VisibilityValue visibility(const PiecewiseConstantFn& lambda, const PiecewiseConstantFn& mu,
                           std::size_t k);

VisibilityValue weighted_visibility(const PiecewiseConstantFn& lambda,
                                    const PiecewiseConstantFn& mu,
                                    const PiecewiseConstantFn& significance, std::size_t k);

/// Allocation-light objective used by the optimizer: returns the
/// (significance-weighted when `significance` is non-empty) visibility for
/// rates `broadcast` and `feed` given per piece on a grid of piece width
/// `width`.
double visibility_value(std::span<const double> broadcast, std::span<const double> feed,
                        std::span<const double> significance, double width, std::size_t k);

/// Independent evaluation of f_k(t) from the integral representation
///   f_k(t) = int_0^t lambda(tau) e^{-Lambda(tau,t)} Q(k, Mu(tau,t)) dtau
/// with Q the regularized upper incomplete gamma, by composite Simpson on each
/// piece (the integrand is smooth inside a piece). `steps` is the total number
/// of subintervals, at least 1000.
double fk_quadrature_oracle(const PiecewiseConstantFn& lambda, const PiecewiseConstantFn& mu,
                            std::size_t k, double t, std::size_t steps);

}  // namespace vshape
