#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "vshape/intensity.hpp"
#include "vshape/numeric.hpp"
#include "vshape/rng.hpp"

namespace vshape {

inline constexpr std::size_t kDefaultFeedCapacity = 20;
inline constexpr std::size_t kRankAbsent = std::numeric_limits<std::size_t>::max();

/// Exact per-piece sampling: Poisson count per piece, uniform placement.
EventSequence sample_poisson(const PiecewiseConstantFn& intensity, Rng& rng, UserId user = {});
EventSequence sample_poisson(const PiecewiseConstantFn& intensity, std::uint64_t seed,
                             UserId user = {});

struct RankBreakpoint {
  double time;
  std::size_t rank;  // 1..capacity or kRankAbsent
};

/// Rank of the broadcaster's latest story over [0, horizon]. Breakpoints are
/// sorted; the rank holds from each breakpoint until the next (or horizon).
struct RankTrajectory {
  double horizon = 0.0;
  std::size_t capacity = kDefaultFeedCapacity;
  std::vector<RankBreakpoint> breakpoints;

  std::size_t rank_at(double t) const;
};

/// Replays both streams through a reverse-chronological feed of `capacity`
/// slots that starts full of other stories. At equal timestamps the other
/// story is delivered first.
RankTrajectory replay_feed(const EventSequence& broadcaster_events,
                           const EventSequence& other_events, std::size_t capacity,
                           double horizon);

/// Measure of {t : rank(t) <= k}, optionally weighted by `significance`.
double empirical_visibility(const RankTrajectory& trajectory, std::size_t k);
double empirical_visibility(const RankTrajectory& trajectory, std::size_t k,
                            const PiecewiseConstantFn& significance);

struct SimulationOptions {
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  /// Sub-stream id (e.g. follower index) so that different followers draw
  /// independent samples from one root seed.
  std::uint64_t stream = 0;
  std::size_t capacity = kDefaultFeedCapacity;
  std::size_t threads = 1;
};

/// Monte Carlo estimate of the (weighted) visibility: every run samples the
/// broadcaster from `lambda` and the rest of the feed from `mu`.
MeanEstimate monte_carlo_visibility(const PiecewiseConstantFn& lambda,
                                    const PiecewiseConstantFn& mu, std::size_t k,
                                    const PiecewiseConstantFn* significance,
                                    const SimulationOptions& options);

/// Same estimator against a fixed recorded feed (times on the lambda grid).
MeanEstimate heldout_visibility(const PiecewiseConstantFn& lambda,
                                const EventSequence& recorded_feed, std::size_t k,
                                const PiecewiseConstantFn* significance,
                                const SimulationOptions& options);

}  // namespace vshape
