#include <algorithm>
#include <cmath>
#include <vector>

#include "vshape/detail/interval_kernel.hpp"
#include "vshape/errors.hpp"
#include "vshape/optimizer.hpp"
#include "vshape/visibility.hpp"

namespace vshape {

namespace {

// Below this normalized mass the 1/(b+c)^2 form cancels badly; the same
// quantities are then taken from the moment form.
constexpr double kDirectFormMass = 0.05;

void check_inputs(std::span<const double> rates, std::span<const double> feed,
                  std::span<const double> significance, double width) {
  if (rates.size() != feed.size()) throw DomainError("rates and feed rates differ in length");
  if (!significance.empty() && significance.size() != rates.size()) {
    throw DomainError("significance length differs from rates");
  }
  if (rates.empty()) throw DomainError("gradient needs at least one piece");
  if (!(width > 0.0)) throw DomainError("piece width must be positive");
  for (std::size_t m = 0; m < rates.size(); ++m) {
    if (!(rates[m] >= 0.0) || !(feed[m] >= 0.0)) throw DomainError("rates must be nonnegative");
  }
}

double weight_at(std::span<const double> significance, std::size_t m) {
  return significance.empty() ? 1.0 : significance[m];
}

}  // namespace

std::vector<double> gradient_v1(std::span<const double> rates, std::span<const double> feed,
                                double width, std::span<const double> significance) {
  check_inputs(rates, feed, significance, width);
  const std::size_t pieces = rates.size();

  // Forward pass on normalized masses: entry h_m, exit y_m.
  std::vector<double> b(pieces), c(pieces), a(pieces), decay(pieces), entry(pieces), exit(pieces);
  double h = 0.0;
  for (std::size_t m = 0; m < pieces; ++m) {
    b[m] = feed[m] * width;
    c[m] = rates[m] * width;
    a[m] = b[m] + c[m];
    decay[m] = a[m] > 700.0 ? 0.0 : std::exp(-a[m]);
    const double beta = b[m] > 0.0 ? c[m] / a[m] : 1.0;
    entry[m] = h;
    exit[m] = std::clamp(beta + (h - beta) * decay[m], 0.0, 1.0);
    h = exit[m];
  }

  std::vector<double> grad(pieces, 0.0);
  for (std::size_t i = 0; i < pieces; ++i) {
    const double bi = b[i];
    const double ci = c[i];
    const double ai = a[i];
    double dy;     // d y_i / d c_i
    double local;  // d (integral over piece i) / d c_i
    if (ai >= kDirectFormMass) {
      dy = bi / (ai * ai) - (entry[i] - ci / ai + bi / (ai * ai)) * decay[i];
      local = (-dy * ai + (exit[i] - entry[i]) + bi) / (ai * ai);
    } else {
      const double r = bi > 0.0 ? bi / ai : 0.0;
      const double beta = bi > 0.0 ? ci / ai : 1.0;
      const double j0 = exp_moment(0, ai);
      const double j1 = exp_moment(1, ai);
      dy = r * j0 - (entry[i] - beta) * decay[i];
      local = r * (j0 - j1) - (entry[i] - beta) * j1;
    }
    double g = weight_at(significance, i) * local;
    // Downstream pieces see c_i only through their entry value:
    // d y_m / d c_i = e^{-a_m} d y_{m-1} / d c_i for m > i.
    for (std::size_t m = i + 1; m < pieces; ++m) {
      const double dy_next = decay[m] * dy;
      const double term = a[m] >= kDirectFormMass ? (dy - dy_next) / a[m] : dy * exp_moment(0, a[m]);
      g += weight_at(significance, m) * term;
      dy = dy_next;
    }
    grad[i] = g * width * width;
  }
  return grad;
}

std::vector<double> gradient_vk(std::span<const double> rates, std::span<const double> feed,
                                std::size_t k, double width,
                                std::span<const double> significance) {
  check_inputs(rates, feed, significance, width);
  const std::size_t pieces = rates.size();
  detail::IntervalKernel kernel(k);

  std::vector<double> entry(k, 0.0), exit(k, 0.0);
  std::vector<double> dexit_dentry(k * k), dexit_dc(k), dint_dentry(k), scratch(k);
  // sens[j] = d entry / d c~_j for sources j before the current piece.
  std::vector<std::vector<double>> sens(pieces, std::vector<double>(k, 0.0));
  std::vector<double> grad(pieces, 0.0);

  for (std::size_t m = 0; m < pieces; ++m) {
    kernel.prepare(feed[m] * width, rates[m] * width, true);
    double dint_dc = 0.0;
    kernel.sensitivity(entry, dexit_dentry, dexit_dc, dint_dentry, dint_dc);
    const double s = weight_at(significance, m);
    for (std::size_t j = 0; j < m; ++j) {
      auto& col = sens[j];
      double dot = 0.0;
      for (std::size_t l = 0; l < k; ++l) dot += dint_dentry[l] * col[l];
      grad[j] += s * dot;
      for (std::size_t r = 0; r < k; ++r) {
        double acc = 0.0;
        for (std::size_t l = 0; l <= r; ++l) acc += dexit_dentry[r * k + l] * col[l];
        scratch[r] = acc;
      }
      col.swap(scratch);
    }
    grad[m] += s * dint_dc;
    sens[m] = dexit_dc;
    kernel.step(entry, exit);
    entry.swap(exit);
  }
  for (double& g : grad) g *= width * width;
  return grad;
}

}  // namespace vshape
