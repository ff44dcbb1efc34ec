#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "vshape/intensity.hpp"
#include "vshape/optimizer.hpp"

namespace vshape {

/// Grid time units are hours; event logs carry unix seconds.
inline constexpr double kSecondsPerUnit = 3600.0;
/// Nudge applied to duplicate timestamps of one user at ingestion.
inline constexpr double kTieJitterSeconds = 1e-6;

/// Per-user event times (unix seconds) observed in [start, end).
class EventLog {
 public:
  EventLog() = default;
  EventLog(double start, double end);

  void add(const UserId& user, double timestamp);
  /// Sorts each user's times and breaks ties (stable, +1 microsecond per
  /// duplicate). Must run before any fitting; `add` invalidates it.
  void finalize();

  double start() const noexcept { return start_; }
  double end() const noexcept { return end_; }
  void set_window(double start, double end);
  /// Window from the data: [floor(min / period), ceil(max / period)) in
  /// multiples of `period_seconds`.
  void infer_window(double period_seconds);

  const std::vector<double>& times(const UserId& user) const;
  const std::map<UserId, std::vector<double>>& users() const noexcept { return events_; }
  std::size_t record_count() const noexcept { return records_; }

 private:
  double start_ = 0.0;
  double end_ = 0.0;
  std::map<UserId, std::vector<double>> events_;
  std::size_t records_ = 0;
};

/// Number of whole periods of length T (hours) inside the log window.
std::size_t whole_periods(const EventLog& log, const TimeGrid& grid);

struct IntensityFit {
  PiecewiseConstantFn rates;
  bool no_events = false;  // inactive user: zero rates
};

/// Periodic maximum-likelihood fit: fold times modulo T into M bins,
/// rate_m = count_m / (width * periods).
IntensityFit fit_intensity(const EventLog& log, const UserId& user, const TimeGrid& grid);

/// s_m = fraction of periods with at least one event in bin m.
PiecewiseConstantFn estimate_significance(const EventLog& log, const UserId& user,
                                          const TimeGrid& grid);

struct FittedProfile {
  UserId id;
  PiecewiseConstantFn intensity;     // own posting rate
  PiecewiseConstantFn feed;          // full timeline rate gamma_v
  PiecewiseConstantFn significance;
  std::size_t periods = 0;
  std::size_t events = 0;
};

struct ProfileSet {
  TimeGrid grid;
  std::size_t periods = 0;
  Network network;
  std::map<UserId, FittedProfile> profiles;

  IntensityMap intensities() const;
};

/// Fits every user appearing in the log or the graph.
ProfileSet fit_profiles(const EventLog& log, const Network& network, const TimeGrid& grid);

/// Followers of `broadcaster` with mu_v = sum of fitted intensities of v's
/// other followees, s_v from v's own activity. Budget defaults to the
/// broadcaster's mean posts per period.
BroadcastProblem build_problem(const ProfileSet& profiles, const UserId& broadcaster,
                               std::size_t k, std::optional<double> budget,
                               ObjectiveKind objective = ObjectiveKind::avm,
                               std::size_t mvm_n = 1);

BroadcastProblem build_problem(const Network& network, const EventLog& log,
                               const UserId& broadcaster, const TimeGrid& grid, std::size_t k,
                               std::optional<double> budget);

/// Feed of v without u's stories, one EventSequence per whole period of the
/// log, in hours relative to the period start.
std::vector<EventSequence> recorded_feeds(const Network& network, const EventLog& log,
                                          const UserId& broadcaster, const UserId& follower,
                                          const TimeGrid& grid);

struct CorpusParameters {
  std::size_t broadcasters = 20;
  std::size_t followers_per_broadcaster = 30;
  std::size_t sources = 40;                 // other accounts followers read
  std::size_t followees_per_follower = 3;   // besides the broadcaster
  double source_rate_min = 0.1;             // mean posts per hour
  double source_rate_max = 1.5;
  double broadcaster_rate_min = 0.05;
  double broadcaster_rate_max = 0.5;
  double follower_rate_min = 0.02;
  double follower_rate_max = 0.4;
  std::size_t train_periods = 14;
  std::size_t test_periods = 14;
  double horizon = 24.0;
  std::size_t pieces = 24;
  double epoch = 1233532800.0;  // 2009-02-02T00:00:00Z
};

struct SyntheticCorpus {
  TimeGrid grid;
  Network network;
  EventLog train;
  EventLog test;
  IntensityMap truth;
  std::vector<UserId> broadcasters;
};

/// Draws diurnal ground-truth intensities and samples disjoint, equally long
/// train and test logs. Bit-identical for a fixed seed.
SyntheticCorpus synthesize_corpus(const CorpusParameters& params, std::uint64_t seed);

}  // namespace vshape
