#include "vshape/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "vshape/errors.hpp"
#include "vshape/rng.hpp"
#include "vshape/simulator.hpp"

namespace vshape {

EventLog::EventLog(double start, double end) { set_window(start, end); }

void EventLog::set_window(double start, double end) {
  if (!(end > start)) throw DomainError("event log window must satisfy end > start");
  start_ = start;
  end_ = end;
}

void EventLog::add(const UserId& user, double timestamp) {
  if (user.empty()) throw ValidationError("event log user id must be nonempty");
  if (!std::isfinite(timestamp)) throw ValidationError("event timestamp must be finite");
  events_[user].push_back(timestamp);
  ++records_;
}

void EventLog::finalize() {
  for (auto& [user, times] : events_) {
    times = EventSequence::from_unsorted(user, std::move(times), kTieJitterSeconds).times;
  }
}

void EventLog::infer_window(double period_seconds) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [user, times] : events_) {
    if (times.empty()) continue;
    lo = std::min(lo, *std::min_element(times.begin(), times.end()));
    hi = std::max(hi, *std::max_element(times.begin(), times.end()));
  }
  if (!std::isfinite(lo)) {
    // No events at all: a single period starting at the epoch.
    set_window(0.0, period_seconds);
    return;
  }
  const double start = std::floor(lo / period_seconds) * period_seconds;
  double end = std::ceil(hi / period_seconds) * period_seconds;
  if (end <= hi) end += period_seconds;
  set_window(start, end);
}

const std::vector<double>& EventLog::times(const UserId& user) const {
  static const std::vector<double> empty;
  auto it = events_.find(user);
  return it == events_.end() ? empty : it->second;
}

std::size_t whole_periods(const EventLog& log, const TimeGrid& grid) {
  const double period = grid.horizon() * kSecondsPerUnit;
  const auto periods = static_cast<std::size_t>(std::floor((log.end() - log.start()) / period + 1e-9));
  if (periods == 0) {
    throw DomainError("event log window is shorter than one period of " +
                      std::to_string(grid.horizon()) + " hours");
  }
  return periods;
}

namespace {

// Calls fn(period, bin) for each event of `user` inside the whole periods.
template <class Fn>
void fold_events(const EventLog& log, const UserId& user, const TimeGrid& grid,
                 std::size_t periods, Fn&& fn) {
  const double period_s = grid.horizon() * kSecondsPerUnit;
  const double span = period_s * static_cast<double>(periods);
  for (double t : log.times(user)) {
    const double offset = t - log.start();
    if (offset < 0.0 || offset >= span) continue;
    const auto p = std::min(static_cast<std::size_t>(offset / period_s), periods - 1);
    const double phase = (offset - static_cast<double>(p) * period_s) / kSecondsPerUnit;
    const double clamped = std::clamp(phase, 0.0, std::nextafter(grid.horizon(), 0.0));
    fn(p, grid.piece_of(clamped));
  }
}

}  // namespace

IntensityFit fit_intensity(const EventLog& log, const UserId& user, const TimeGrid& grid) {
  const std::size_t periods = whole_periods(log, grid);
  std::vector<double> counts(grid.pieces(), 0.0);
  std::size_t total = 0;
  fold_events(log, user, grid, periods, [&](std::size_t, std::size_t bin) {
    counts[bin] += 1.0;
    ++total;
  });
  const double exposure = grid.width() * static_cast<double>(periods);
  for (double& c : counts) c /= exposure;
  return {PiecewiseConstantFn(grid, std::move(counts)), total == 0};
}

PiecewiseConstantFn estimate_significance(const EventLog& log, const UserId& user,
                                          const TimeGrid& grid) {
  const std::size_t periods = whole_periods(log, grid);
  std::set<std::pair<std::size_t, std::size_t>> active;
  fold_events(log, user, grid, periods,
              [&](std::size_t p, std::size_t bin) { active.emplace(bin, p); });
  std::vector<double> s(grid.pieces(), 0.0);
  for (const auto& [bin, p] : active) s[bin] += 1.0;
  for (double& v : s) v /= static_cast<double>(periods);
  return {grid, std::move(s)};
}

IntensityMap ProfileSet::intensities() const {
  IntensityMap out;
  for (const auto& [id, p] : profiles) out.emplace(id, p.intensity);
  return out;
}

ProfileSet fit_profiles(const EventLog& log, const Network& network, const TimeGrid& grid) {
  ProfileSet out{grid, whole_periods(log, grid), network, {}};
  std::set<UserId> users;
  for (const auto& [id, times] : log.users()) users.insert(id);
  for (const auto& [u, followers] : network.adjacency()) {
    users.insert(u);
    users.insert(followers.begin(), followers.end());
  }
  for (const auto& id : users) {
    auto fit = fit_intensity(log, id, grid);
    const double exposure = grid.width() * static_cast<double>(out.periods);
    std::size_t events = 0;
    for (double r : fit.rates.values()) events += static_cast<std::size_t>(std::llround(r * exposure));
    FittedProfile profile{id, fit.rates, PiecewiseConstantFn::zeros(grid),
                          estimate_significance(log, id, grid), out.periods, events};
    out.profiles.emplace(id, std::move(profile));
  }
  const auto intensities = out.intensities();
  for (auto& [id, profile] : out.profiles) profile.feed = feed_rate(network, intensities, id, grid);
  return out;
}

BroadcastProblem build_problem(const ProfileSet& profiles, const UserId& broadcaster,
                               std::size_t k, std::optional<double> budget,
                               ObjectiveKind objective, std::size_t mvm_n) {
  const auto& network = profiles.network;
  if (!network.has_broadcaster(broadcaster) || network.followers(broadcaster).empty()) {
    throw DomainError("broadcaster " + broadcaster + " has no followers in the network");
  }
  const auto intensities = profiles.intensities();
  BroadcastProblem problem{profiles.grid, {}, k, 0.0, objective, mvm_n};
  for (const auto& v : network.followers(broadcaster)) {
    auto it = profiles.profiles.find(v);
    auto significance = it == profiles.profiles.end() ? PiecewiseConstantFn::zeros(profiles.grid)
                                                      : it->second.significance;
    problem.followers.push_back(
        {v, feed_rate_excluding(network, intensities, broadcaster, v, profiles.grid),
         std::move(significance)});
  }
  if (budget) {
    problem.budget = *budget;
  } else {
    auto it = profiles.profiles.find(broadcaster);
    const double posts = it == profiles.profiles.end() ? 0.0 : static_cast<double>(it->second.events);
    problem.budget = posts / static_cast<double>(profiles.periods);
    if (!(problem.budget > 0.0)) {
      throw DomainError("broadcaster " + broadcaster + " has no posts; an explicit budget is required");
    }
  }
  problem.validate();
  return problem;
}

BroadcastProblem build_problem(const Network& network, const EventLog& log,
                               const UserId& broadcaster, const TimeGrid& grid, std::size_t k,
                               std::optional<double> budget) {
  if (!network.has_broadcaster(broadcaster)) {
    throw DomainError("broadcaster " + broadcaster + " is not in the network");
  }
  return build_problem(fit_profiles(log, network, grid), broadcaster, k, budget);
}

std::vector<EventSequence> recorded_feeds(const Network& network, const EventLog& log,
                                          const UserId& broadcaster, const UserId& follower,
                                          const TimeGrid& grid) {
  if (!network.follows(follower, broadcaster)) {
    throw DomainError(follower + " does not follow " + broadcaster);
  }
  const std::size_t periods = whole_periods(log, grid);
  const double period_s = grid.horizon() * kSecondsPerUnit;
  std::vector<std::vector<double>> buckets(periods);
  for (const auto& w : network.followees(follower)) {
    if (w == broadcaster) continue;
    for (double t : log.times(w)) {
      const double offset = t - log.start();
      if (offset < 0.0) continue;
      const auto p = static_cast<std::size_t>(offset / period_s);
      if (p >= periods) continue;
      buckets[p].push_back((offset - static_cast<double>(p) * period_s) / kSecondsPerUnit);
    }
  }
  std::vector<EventSequence> out;
  out.reserve(periods);
  for (auto& b : buckets) {
    out.push_back(EventSequence::from_unsorted(follower, std::move(b),
                                               kTieJitterSeconds / kSecondsPerUnit));
  }
  return out;
}

namespace {

std::string numbered(const char* prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return prefix + digits;
}

// Smooth daily profile with a random peak, scaled to mean rate `base`.
PiecewiseConstantFn diurnal(const TimeGrid& grid, Rng& rng, double lo, double hi) {
  const double base = lo + (hi - lo) * rng.uniform();
  const double peak = rng.uniform() * static_cast<double>(grid.pieces());
  const double concentration = 1.0 + 3.0 * rng.uniform();
  const double floor = 0.05 + 0.3 * rng.uniform();
  std::vector<double> shape(grid.pieces());
  double total = 0.0;
  for (std::size_t m = 0; m < shape.size(); ++m) {
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(m) + 0.5 - peak) /
                         static_cast<double>(grid.pieces());
    shape[m] = floor + std::exp(concentration * (std::cos(phase) - 1.0));
    total += shape[m];
  }
  for (double& v : shape) v *= base * static_cast<double>(grid.pieces()) / total;
  return {grid, std::move(shape)};
}

}  // namespace

SyntheticCorpus synthesize_corpus(const CorpusParameters& params, std::uint64_t seed) {
  if (params.broadcasters == 0 || params.followers_per_broadcaster == 0) {
    throw ValidationError("corpus needs at least one broadcaster and one follower");
  }
  if (params.followees_per_follower > params.sources) {
    throw ValidationError("followees per follower exceeds the number of sources");
  }
  if (params.train_periods == 0 || params.test_periods == 0) {
    throw ValidationError("corpus needs at least one train and one test period");
  }
  const TimeGrid grid(params.horizon, params.pieces);
  const double period_s = params.horizon * kSecondsPerUnit;
  const double train_end = params.epoch + period_s * static_cast<double>(params.train_periods);
  SyntheticCorpus corpus{grid,
                         {},
                         EventLog(params.epoch, train_end),
                         EventLog(train_end, train_end + period_s * static_cast<double>(params.test_periods)),
                         {},
                         {}};

  Rng rng(derive_seed(seed, 0x636f72707573ULL));
  std::vector<UserId> sources;
  for (std::size_t i = 0; i < params.sources; ++i) {
    sources.push_back(numbered("s", i));
    corpus.truth.emplace(sources.back(),
                         diurnal(grid, rng, params.source_rate_min, params.source_rate_max));
  }
  for (std::size_t b = 0; b < params.broadcasters; ++b) {
    const UserId u = numbered("b", b);
    corpus.broadcasters.push_back(u);
    corpus.truth.emplace(u, diurnal(grid, rng, params.broadcaster_rate_min,
                                    params.broadcaster_rate_max));
    for (std::size_t f = 0; f < params.followers_per_broadcaster; ++f) {
      const UserId v = numbered("f", b) + "_" + numbered("", f);
      corpus.truth.emplace(v, diurnal(grid, rng, params.follower_rate_min,
                                      params.follower_rate_max));
      corpus.network.add_follow(u, v);
      // Partial Fisher-Yates pick of distinct sources.
      std::vector<std::size_t> pool(sources.size());
      for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
      for (std::size_t i = 0; i < params.followees_per_follower; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size() - i));
        std::swap(pool[i], pool[std::min(j, pool.size() - 1)]);
        corpus.network.add_follow(sources[pool[i]], v);
      }
    }
  }

  std::size_t user_index = 0;
  for (const auto& [id, truth] : corpus.truth) {
    ++user_index;
    const std::size_t total = params.train_periods + params.test_periods;
    for (std::size_t p = 0; p < total; ++p) {
      const auto sample = sample_poisson(truth, derive_seed(seed, user_index, p));
      auto& log = p < params.train_periods ? corpus.train : corpus.test;
      for (double t : sample.times) {
        log.add(id, params.epoch + (static_cast<double>(p) * params.horizon + t) * kSecondsPerUnit);
      }
    }
  }
  corpus.train.finalize();
  corpus.test.finalize();
  return corpus;
}

}  // namespace vshape
