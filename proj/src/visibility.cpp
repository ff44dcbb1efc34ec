#include "vshape/visibility.hpp"

#include <algorithm>
#include <cmath>

#include "vshape/detail/interval_kernel.hpp"
#include "vshape/errors.hpp"
#include "vshape/numeric.hpp"

namespace vshape {

namespace {

// e^{-x} sum_{j<n} x^j / j!, each term formed in log space so large x
// cannot overflow the power before the exponential damps it.
double regularized_upper_gamma_int(unsigned n, double x) {
  if (x == 0.0) return 1.0;
  const double log_x = std::log(x);
  double sum = 0.0;
  for (unsigned j = 0; j < n; ++j) {
    sum += std::exp(-x + j * log_x - std::lgamma(static_cast<double>(j) + 1.0));
  }
  return sum;
}

void check_same_grid(const PiecewiseConstantFn& a, const PiecewiseConstantFn& b) {
  if (!(a.grid() == b.grid())) throw DomainError("intensities are defined on different grids");
}

}  // namespace

double upper_gamma_int(unsigned n, double x) {
  if (n == 0) throw DomainError("integer incomplete gamma needs order n >= 1");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma argument must be nonnegative");
  return std::tgamma(static_cast<double>(n)) * regularized_upper_gamma_int(n, x);
}

double exp_moment(unsigned i, double a) {
  if (!(a >= 0.0)) throw DomainError("exp_moment needs a >= 0");
  if (a == 0.0) return 1.0 / (i + 1.0);
  if (i == 0) return -std::expm1(-a) / a;
  if (a >= i + 1.0) {
    // [i! - Gamma(i+1, a)] / a^{i+1}; the bracket is at least ~half of i!
    // here, so the difference loses nothing.
    double scale = 1.0 / a;
    for (unsigned j = 1; j <= i; ++j) scale *= j / a;
    return scale * (1.0 - regularized_upper_gamma_int(i + 1, a));
  }
  // Complementary tail of the same finite sum:
  // e^{-a} sum_{n>=0} a^n i! / (i+1+n)!, all terms positive.
  double term = 1.0 / (i + 1.0);
  double sum = term;
  for (unsigned n = 0; n < 10000; ++n) {
    term *= a / (i + 2.0 + n);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return std::exp(-a) * sum;
}

double IntervalSolution::value(double u) const {
  const double a = feed_mass + broadcast_mass;
  const double decay = a * u > 700.0 ? 0.0 : std::exp(-a * u);
  double poly = 0.0;
  for (std::size_t i = alpha.size(); i-- > 0;) poly = poly * u + alpha[i];
  return decay * poly + beta.back();
}

double IntervalSolution::derivative(double u) const {
  const double a = feed_mass + broadcast_mass;
  const double decay = a * u > 700.0 ? 0.0 : std::exp(-a * u);
  double poly = 0.0;
  double dpoly = 0.0;
  for (std::size_t i = alpha.size(); i-- > 0;) {
    dpoly = dpoly * u + poly;
    poly = poly * u + alpha[i];
  }
  return decay * (dpoly - a * poly);
}

IntervalSolution interval_coefficients(double feed_mass, double broadcast_mass,
                                       std::span<const double> entry, std::size_t index) {
  const std::size_t k = entry.size();
  if (k == 0) throw DomainError("entry probabilities must have k >= 1 components");
  for (std::size_t j = 0; j < k; ++j) {
    if (!(entry[j] >= 0.0 && entry[j] <= 1.0)) throw DomainError("entry probability outside [0, 1]");
    if (j > 0 && entry[j] < entry[j - 1]) throw DomainError("entry probabilities must be monotone in k");
  }
  detail::IntervalKernel kernel(k);
  kernel.prepare(feed_mass, broadcast_mass);

  IntervalSolution out;
  out.index = index;
  out.feed_mass = feed_mass;
  out.broadcast_mass = broadcast_mass;
  out.entry.assign(entry.begin(), entry.end());
  out.alpha.resize(k);
  out.beta.resize(k);
  out.exit.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.alpha[i] = kernel.weight(i) * (entry[k - i - 1] - kernel.beta(k - i));
    out.beta[i] = kernel.beta(i + 1);
  }
  out.integral = kernel.step(entry, out.exit);
  return out;
}

std::vector<IntervalSolution> fk_trajectory(const PiecewiseConstantFn& lambda,
                                            const PiecewiseConstantFn& mu, std::size_t k) {
  check_same_grid(lambda, mu);
  if (k == 0) throw DomainError("rank threshold k must be at least 1");
  const double width = lambda.grid().width();
  std::vector<IntervalSolution> out;
  out.reserve(lambda.size());
  std::vector<double> entry(k, 0.0);
  for (std::size_t m = 0; m < lambda.size(); ++m) {
    out.push_back(interval_coefficients(mu[m] * width, lambda[m] * width, entry, m));
    entry = out.back().exit;
  }
  return out;
}

double trajectory_value(const std::vector<IntervalSolution>& trajectory, const TimeGrid& grid,
                        double t) {
  if (trajectory.size() != grid.pieces()) throw DomainError("trajectory does not match grid");
  if (t == grid.horizon()) return trajectory.back().exit.back();
  const std::size_t m = grid.piece_of(t);
  const double u = (t - grid.boundary(m)) / grid.width();
  return trajectory[m].value(std::clamp(u, 0.0, 1.0));
}

VisibilityValue weighted_visibility(const PiecewiseConstantFn& lambda,
                                    const PiecewiseConstantFn& mu,
                                    const PiecewiseConstantFn& significance, std::size_t k) {
  check_same_grid(lambda, significance);
  const auto trajectory = fk_trajectory(lambda, mu, k);
  const double width = lambda.grid().width();
  VisibilityValue out;
  out.k = k;
  out.contributions.resize(trajectory.size());
  for (std::size_t m = 0; m < trajectory.size(); ++m) {
    out.contributions[m] = width * significance[m] * trajectory[m].integral;
  }
  out.value = compensated_sum(out.contributions);
  return out;
}

VisibilityValue visibility(const PiecewiseConstantFn& lambda, const PiecewiseConstantFn& mu,
                           std::size_t k) {
  return weighted_visibility(lambda, mu, PiecewiseConstantFn::constant(lambda.grid(), 1.0), k);
}

double visibility_value(std::span<const double> broadcast, std::span<const double> feed,
                        std::span<const double> significance, double width, std::size_t k) {
  const std::size_t pieces = broadcast.size();
  if (feed.size() != pieces || (!significance.empty() && significance.size() != pieces)) {
    throw DomainError("visibility inputs have mismatched lengths");
  }
  if (k == 0) throw DomainError("rank threshold k must be at least 1");
  CompensatedSum total;
  if (k == 1) {
    double h = 0.0;
    for (std::size_t m = 0; m < pieces; ++m) {
      const double b = feed[m] * width;
      const double c = broadcast[m] * width;
      if (!(b >= 0.0 && c >= 0.0)) throw DomainError("rates must be nonnegative");
      const double a = b + c;
      const double beta = a > 0.0 && b > 0.0 ? c / a : 1.0;
      const double decay = a > 700.0 ? 0.0 : std::exp(-a);
      const double integral = std::max(0.0, beta + (h - beta) * exp_moment(0, a));
      h = std::clamp(beta + (h - beta) * decay, 0.0, 1.0);
      const double weight = significance.empty() ? 1.0 : significance[m];
      total.add(width * weight * integral);
    }
    return total.value();
  }
  detail::IntervalKernel kernel(k);
  std::vector<double> entry(k, 0.0);
  std::vector<double> exit(k, 0.0);
  for (std::size_t m = 0; m < pieces; ++m) {
    kernel.prepare(feed[m] * width, broadcast[m] * width);
    const double integral = kernel.step(entry, exit);
    entry.swap(exit);
    const double weight = significance.empty() ? 1.0 : significance[m];
    total.add(width * weight * integral);
  }
  return total.value();
}

double fk_quadrature_oracle(const PiecewiseConstantFn& lambda, const PiecewiseConstantFn& mu,
                            std::size_t k, double t, std::size_t steps) {
  check_same_grid(lambda, mu);
  if (k == 0) throw DomainError("rank threshold k must be at least 1");
  if (steps < 1000) throw DomainError("quadrature oracle needs at least 1000 steps");
  const auto& grid = lambda.grid();
  if (!(t >= 0.0 && t <= grid.horizon())) throw DomainError("oracle time outside [0, T]");
  if (t == 0.0) return 0.0;

  // Cumulative masses at the piece boundaries make the inner integrals O(1).
  const std::size_t pieces = grid.pieces();
  std::vector<double> cum_lambda(pieces + 1, 0.0);
  std::vector<double> cum_mu(pieces + 1, 0.0);
  for (std::size_t m = 0; m < pieces; ++m) {
    cum_lambda[m + 1] = cum_lambda[m] + lambda[m] * grid.width();
    cum_mu[m + 1] = cum_mu[m] + mu[m] * grid.width();
  }
  const std::size_t piece_t = t >= grid.horizon() ? pieces - 1 : grid.piece_of(t);
  auto mass_to = [&](const std::vector<double>& cum, const PiecewiseConstantFn& f, double x,
                     std::size_t piece) {
    return cum[piece] + f[piece] * (x - grid.boundary(piece));
  };
  const double lambda_t = mass_to(cum_lambda, lambda, t, piece_t);
  const double mu_t = mass_to(cum_mu, mu, t, piece_t);

  CompensatedSum total;
  for (std::size_t m = 0; m <= piece_t; ++m) {
    const double lo = grid.boundary(m);
    const double hi = std::min(t, grid.boundary(m + 1));
    if (hi <= lo || lambda[m] == 0.0) continue;
    auto n = static_cast<std::size_t>(std::ceil(steps * (hi - lo) / t));
    n = std::max<std::size_t>(n + (n % 2), 2);
    const double h = (hi - lo) / static_cast<double>(n);
    auto integrand = [&](double tau) {
      const double lam = lambda_t - mass_to(cum_lambda, lambda, tau, m);
      const double mus = mu_t - mass_to(cum_mu, mu, tau, m);
      return lambda[m] * std::exp(-lam) * regularized_upper_gamma_int(static_cast<unsigned>(k), mus);
    };
    double s = integrand(lo) + integrand(hi);
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * integrand(lo + h * i);
    total.add(s * h / 3.0);
  }
  return total.value();
}

}  // namespace vshape
