#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace vshape {

using UserId = std::string;

/// Uniform partition of [0, T] into M pieces of width T/M.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t pieces);

  double horizon() const noexcept { return horizon_; }
  std::size_t pieces() const noexcept { return pieces_; }
  double width() const noexcept { return horizon_ / static_cast<double>(pieces_); }
  /// Boundary tau_m = m * width, m in [0, M]. tau_M is exactly the horizon.
  double boundary(std::size_t m) const;
  /// Piece containing t under the right-open convention [tau_m, tau_{m+1}).
  std::size_t piece_of(double t) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_;
  std::size_t pieces_;
};

/// Nonnegative step function on a TimeGrid. Used for posting intensities,
/// feed intensities and significance weights alike.
class PiecewiseConstantFn {
 public:
  PiecewiseConstantFn(TimeGrid grid, std::vector<double> values);

  static PiecewiseConstantFn zeros(const TimeGrid& grid);
  static PiecewiseConstantFn constant(const TimeGrid& grid, double value);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t m) const { return values_[m]; }
  std::size_t size() const noexcept { return values_.size(); }

  double evaluate_at(double t) const;
  /// Exact integral over [t0, t1].
  double integrate(double t0, double t1) const;
  double total() const { return integrate(0.0, grid_.horizon()); }

  PiecewiseConstantFn& operator+=(const PiecewiseConstantFn& other);
  friend PiecewiseConstantFn operator+(PiecewiseConstantFn lhs, const PiecewiseConstantFn& rhs) {
    lhs += rhs;
    return lhs;
  }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

/// Strictly increasing event times of one user within [0, T].
struct EventSequence {
  UserId user;
  std::vector<double> times;

  /// Sorts and enforces strict increase by nudging duplicates forward by
  /// `jitter` each (stable w.r.t. input order).
  static EventSequence from_unsorted(UserId user, std::vector<double> times, double jitter);
  bool empty() const noexcept { return times.empty(); }
  std::size_t size() const noexcept { return times.size(); }
};

/// Follow graph. `followers(u)` is the set of v with A_uv = 1.
class Network {
 public:
  void add_follow(const UserId& broadcaster, const UserId& follower);

  const std::set<UserId>& followers(const UserId& broadcaster) const;
  /// Broadcasters followed by v.
  const std::set<UserId>& followees(const UserId& follower) const;
  bool follows(const UserId& follower, const UserId& broadcaster) const;
  bool has_broadcaster(const UserId& u) const { return followers_.contains(u); }

  const std::map<UserId, std::set<UserId>>& adjacency() const noexcept { return followers_; }
  std::size_t edge_count() const noexcept { return edges_; }

 private:
  std::map<UserId, std::set<UserId>> followers_;
  std::map<UserId, std::set<UserId>> followees_;
  std::size_t edges_ = 0;
};

using IntensityMap = std::map<UserId, PiecewiseConstantFn>;

/// Feed rate of v due to every broadcaster it follows except u, built as a
/// sum over the followees. Users without an entry in `intensities` contribute
/// nothing. Throws DomainError if v does not follow u.
PiecewiseConstantFn feed_rate_excluding(const Network& network, const IntensityMap& intensities,
                                        const UserId& u, const UserId& v, const TimeGrid& grid);

/// Full feed rate gamma_v: sum of the intensities of every followee.
PiecewiseConstantFn feed_rate(const Network& network, const IntensityMap& intensities,
                              const UserId& v, const TimeGrid& grid);

}  // namespace vshape
