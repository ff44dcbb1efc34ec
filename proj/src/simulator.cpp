#include "vshape/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "vshape/errors.hpp"
#include "vshape/parallel.hpp"

namespace vshape {

EventSequence sample_poisson(const PiecewiseConstantFn& intensity, Rng& rng, UserId user) {
  const auto& grid = intensity.grid();
  EventSequence out{std::move(user), {}};
  for (std::size_t m = 0; m < grid.pieces(); ++m) {
    const double lo = grid.boundary(m);
    const double hi = grid.boundary(m + 1);
    const std::uint64_t n = rng.poisson(intensity[m] * (hi - lo));
    const std::size_t first = out.times.size();
    for (std::uint64_t i = 0; i < n; ++i) {
      out.times.push_back(std::min(lo + (hi - lo) * rng.uniform(), std::nextafter(hi, lo)));
    }
    std::sort(out.times.begin() + static_cast<std::ptrdiff_t>(first), out.times.end());
  }
  return out;
}

EventSequence sample_poisson(const PiecewiseConstantFn& intensity, std::uint64_t seed,
                             UserId user) {
  Rng rng(seed);
  return sample_poisson(intensity, rng, std::move(user));
}

std::size_t RankTrajectory::rank_at(double t) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t,
                             [](double x, const RankBreakpoint& b) { return x < b.time; });
  if (it == breakpoints.begin()) return kRankAbsent;
  return std::prev(it)->rank;
}

RankTrajectory replay_feed(const EventSequence& broadcaster_events,
                           const EventSequence& other_events, std::size_t capacity,
                           double horizon) {
  if (capacity == 0) throw DomainError("feed capacity must be at least 1");
  RankTrajectory out;
  out.horizon = horizon;
  out.capacity = capacity;
  out.breakpoints.push_back({0.0, kRankAbsent});

  std::size_t rank = kRankAbsent;
  auto set_rank = [&](double t, std::size_t r) {
    if (r == rank) return;
    rank = r;
    if (out.breakpoints.back().time == t) {
      out.breakpoints.back().rank = r;
    } else {
      out.breakpoints.push_back({t, r});
    }
  };

  const auto& own = broadcaster_events.times;
  const auto& other = other_events.times;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < own.size() || j < other.size()) {
    // Other stories win ties.
    const bool take_other = j < other.size() && (i >= own.size() || other[j] <= own[i]);
    const double t = take_other ? other[j] : own[i];
    if (t > horizon) break;
    if (take_other) {
      ++j;
      if (rank != kRankAbsent) set_rank(t, rank + 1 > capacity ? kRankAbsent : rank + 1);
    } else {
      ++i;
      set_rank(t, 1);
    }
  }
  return out;
}

namespace {

template <class Measure>
double visible_measure(const RankTrajectory& trajectory, std::size_t k, Measure&& measure) {
  if (k == 0) throw DomainError("rank threshold k must be at least 1");
  if (k > trajectory.capacity) {
    throw DomainError("k = " + std::to_string(k) + " exceeds the feed capacity " +
                      std::to_string(trajectory.capacity));
  }
  CompensatedSum total;
  const auto& bps = trajectory.breakpoints;
  for (std::size_t n = 0; n < bps.size(); ++n) {
    if (bps[n].rank == kRankAbsent || bps[n].rank > k) continue;
    const double lo = bps[n].time;
    const double hi = n + 1 < bps.size() ? bps[n + 1].time : trajectory.horizon;
    if (hi > lo) total.add(measure(lo, hi));
  }
  return total.value();
}

MeanEstimate run_replicates(std::size_t runs, std::size_t threads,
                            const std::function<double(std::size_t)>& replicate) {
  if (runs == 0) throw ValidationError("number of simulation runs must be at least 1");
  std::vector<double> values(runs, 0.0);
  parallel_for(runs, threads, [&](std::size_t r) { values[r] = replicate(r); });
  return mean_and_std_error(values);
}

}  // namespace

double empirical_visibility(const RankTrajectory& trajectory, std::size_t k) {
  return visible_measure(trajectory, k, [](double lo, double hi) { return hi - lo; });
}

double empirical_visibility(const RankTrajectory& trajectory, std::size_t k,
                            const PiecewiseConstantFn& significance) {
  const double horizon = significance.grid().horizon();
  return visible_measure(trajectory, k, [&](double lo, double hi) {
    return significance.integrate(std::min(lo, horizon), std::min(hi, horizon));
  });
}

MeanEstimate monte_carlo_visibility(const PiecewiseConstantFn& lambda,
                                    const PiecewiseConstantFn& mu, std::size_t k,
                                    const PiecewiseConstantFn* significance,
                                    const SimulationOptions& options) {
  if (!(lambda.grid() == mu.grid())) throw DomainError("intensities are defined on different grids");
  const double horizon = lambda.grid().horizon();
  return run_replicates(options.runs, options.threads, [&](std::size_t run) {
    const auto own = sample_poisson(lambda, derive_seed(options.seed, options.stream, 2 * run));
    const auto other = sample_poisson(mu, derive_seed(options.seed, options.stream, 2 * run + 1));
    const auto trajectory = replay_feed(own, other, options.capacity, horizon);
    return significance ? empirical_visibility(trajectory, k, *significance)
                        : empirical_visibility(trajectory, k);
  });
}

MeanEstimate heldout_visibility(const PiecewiseConstantFn& lambda,
                                const EventSequence& recorded_feed, std::size_t k,
                                const PiecewiseConstantFn* significance,
                                const SimulationOptions& options) {
  const double horizon = lambda.grid().horizon();
  for (double t : recorded_feed.times) {
    if (!(t >= 0.0 && t <= horizon)) throw DomainError("recorded feed event outside [0, T]");
  }
  return run_replicates(options.runs, options.threads, [&](std::size_t run) {
    const auto own = sample_poisson(lambda, derive_seed(options.seed, options.stream, 2 * run));
    const auto trajectory = replay_feed(own, recorded_feed, options.capacity, horizon);
    return significance ? empirical_visibility(trajectory, k, *significance)
                        : empirical_visibility(trajectory, k);
  });
}

}  // namespace vshape
