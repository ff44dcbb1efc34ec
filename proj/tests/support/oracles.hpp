#pragma once
// Test-only reference implementations. Each one follows a different route
// from the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "vshape/intensity.hpp"
#include "vshape/rng.hpp"
#include "vshape/simulator.hpp"

namespace vshape::testing {

struct OdeResult {
  std::vector<std::vector<double>> boundaries;  // f_1..f_k at the end of each piece
  double integral = 0.0;                        // int s(t) f_k(t) dt
};

/// Classical RK4 on f_j' = -(mu+lambda) f_j + mu f_{j-1} + lambda, f_0 = 0,
/// with the weighted integral of f_k as an extra state.
inline OdeResult ode_reference(std::span<const double> lambda, std::span<const double> mu,
                               std::span<const double> s, std::size_t k, double width,
                               std::size_t steps_per_piece = 4000) {
  OdeResult out;
  std::vector<double> z(k + 1, 0.0);
  auto rhs = [&](std::size_t m, const std::vector<double>& y) {
    std::vector<double> d(k + 1);
    for (std::size_t j = 0; j < k; ++j) {
      const double prev = j == 0 ? 0.0 : y[j - 1];
      d[j] = -(mu[m] + lambda[m]) * y[j] + mu[m] * prev + lambda[m];
    }
    d[k] = (s.empty() ? 1.0 : s[m]) * y[k - 1];
    return d;
  };
  const double h = width / static_cast<double>(steps_per_piece);
  for (std::size_t m = 0; m < lambda.size(); ++m) {
    for (std::size_t n = 0; n < steps_per_piece; ++n) {
      auto k1 = rhs(m, z);
      std::vector<double> t(k + 1);
      for (std::size_t i = 0; i <= k; ++i) t[i] = z[i] + 0.5 * h * k1[i];
      auto k2 = rhs(m, t);
      for (std::size_t i = 0; i <= k; ++i) t[i] = z[i] + 0.5 * h * k2[i];
      auto k3 = rhs(m, t);
      for (std::size_t i = 0; i <= k; ++i) t[i] = z[i] + h * k3[i];
      auto k4 = rhs(m, t);
      for (std::size_t i = 0; i <= k; ++i) z[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    out.boundaries.emplace_back(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k));
  }
  out.integral = z[k];
  return out;
}

/// Feed replay with a materialized FIFO queue of source flags. Returns the
/// time during which the broadcaster's newest story sits within the top k.
inline double queue_reference_visibility(const std::vector<double>& own,
                                         const std::vector<double>& other, std::size_t capacity,
                                         std::size_t k, double horizon) {
  std::deque<bool> queue(capacity, false);  // true = broadcaster story
  std::vector<std::pair<double, bool>> merged;
  for (double t : other) merged.emplace_back(t, false);
  for (double t : own) merged.emplace_back(t, true);
  // Other stories first at equal times.
  std::stable_sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return !a.second && b.second;
  });
  auto visible = [&] {
    for (std::size_t i = 0; i < k && i < queue.size(); ++i) {
      if (queue[i]) return true;
    }
    return false;
  };
  double last = 0.0;
  double total = 0.0;
  for (const auto& [t, mine] : merged) {
    if (t > horizon) break;
    if (visible()) total += t - last;
    last = t;
    queue.push_front(mine);
    queue.pop_back();
  }
  if (visible()) total += horizon - last;
  return total;
}

/// Projection onto {x >= 0, sum x <= budget} by enumerating KKT active sets.
inline std::vector<double> kkt_projection(const std::vector<double>& c, double budget) {
  const std::size_t n = c.size();
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    for (int tight = 0; tight < 2; ++tight) {
      double sum = 0.0;
      std::size_t free = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
          sum += c[i];
          ++free;
        }
      }
      double theta = 0.0;
      if (tight) {
        if (free == 0) continue;
        theta = (sum - budget) / static_cast<double>(free);
        if (theta < -1e-15) continue;
      }
      std::vector<double> x(n, 0.0);
      bool ok = true;
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
          x[i] = c[i] - theta;
          if (x[i] < -1e-15) ok = false;
        } else if (c[i] - theta > 1e-15) {
          ok = false;  // multiplier of x_i >= 0 would be negative
        }
        total += x[i];
      }
      if (!ok || total > budget + 1e-12) continue;
      double dist = 0.0;
      for (std::size_t i = 0; i < n; ++i) dist += (x[i] - c[i]) * (x[i] - c[i]);
      if (dist < best_dist) {
        best_dist = dist;
        best = x;
      }
    }
  }
  return best;
}

/// Central finite differences of f at x with step h.
inline std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                              std::vector<double> x, double h) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

/// Best objective over budget splits (share, 1 - share) of a two-piece
/// allocation at the given share resolution.
inline std::pair<double, double> grid_search_two_pieces(
    const std::function<double(std::span<const double>)>& objective, double budget, double width,
    double resolution) {
  double best = -std::numeric_limits<double>::infinity();
  double best_share = 0.0;
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / resolution));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double share = static_cast<double>(i) / static_cast<double>(steps);
    const std::vector<double> c{budget * share / width, budget * (1.0 - share) / width};
    const double v = objective(c);
    if (v > best) {
      best = v;
      best_share = share;
    }
  }
  return {best, best_share};
}

/// Ogata thinning against the maximum rate; a cross-check for the per-piece
/// sampler.
inline std::vector<double> thinning_sample(const PiecewiseConstantFn& f, std::uint64_t seed) {
  Rng rng(seed);
  double peak = 0.0;
  for (double v : f.values()) peak = std::max(peak, v);
  std::vector<double> out;
  if (peak == 0.0) return out;
  double t = 0.0;
  const double horizon = f.grid().horizon();
  for (;;) {
    t += rng.exponential() / peak;
    if (t >= horizon) break;
    if (rng.uniform() * peak < f.evaluate_at(t)) out.push_back(t);
  }
  return out;
}

/// Deterministic random instances for property tests.
class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(rng_.uniform() * static_cast<double>(hi - lo + 1));
  }
  std::vector<double> rates(std::size_t n, double lo, double hi) {
    std::vector<double> out(n);
    for (double& v : out) v = uniform(lo, hi);
    return out;
  }

 private:
  Rng rng_;
};

}  // namespace vshape::testing
