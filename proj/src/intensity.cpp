#include "vshape/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vshape/errors.hpp"

namespace vshape {

TimeGrid::TimeGrid(double horizon, std::size_t pieces) : horizon_(horizon), pieces_(pieces) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw DomainError("time grid horizon must be positive and finite");
  }
  if (pieces == 0) throw DomainError("time grid needs at least one piece");
}

double TimeGrid::boundary(std::size_t m) const {
  if (m > pieces_) throw DomainError("grid boundary index out of range");
  if (m == pieces_) return horizon_;
  return width() * static_cast<double>(m);
}

std::size_t TimeGrid::piece_of(double t) const {
  if (!(t >= 0.0 && t < horizon_)) {
    std::ostringstream msg;
    msg << "time " << t << " outside [0, " << horizon_ << ")";
    throw DomainError(msg.str());
  }
  auto m = static_cast<std::size_t>(std::floor(t / width()));
  // floor(t / width) can land one piece off when width is not representable.
  if (m >= pieces_) m = pieces_ - 1;
  while (m > 0 && t < boundary(m)) --m;
  while (m + 1 < pieces_ && t >= boundary(m + 1)) ++m;
  return m;
}

PiecewiseConstantFn::PiecewiseConstantFn(TimeGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.pieces()) {
    throw DomainError("piecewise function has " + std::to_string(values_.size()) +
                      " values for a grid of " + std::to_string(grid_.pieces()) + " pieces");
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw DomainError("piecewise function values must be finite and nonnegative");
    }
  }
}

PiecewiseConstantFn PiecewiseConstantFn::zeros(const TimeGrid& grid) {
  return {grid, std::vector<double>(grid.pieces(), 0.0)};
}

PiecewiseConstantFn PiecewiseConstantFn::constant(const TimeGrid& grid, double value) {
  return {grid, std::vector<double>(grid.pieces(), value)};
}

double PiecewiseConstantFn::evaluate_at(double t) const { return values_[grid_.piece_of(t)]; }

double PiecewiseConstantFn::integrate(double t0, double t1) const {
  if (!(t0 >= 0.0 && t0 <= t1 && t1 <= grid_.horizon())) {
    std::ostringstream msg;
    msg << "integration bounds [" << t0 << ", " << t1 << "] invalid for horizon "
        << grid_.horizon();
    throw DomainError(msg.str());
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < values_.size(); ++m) {
    const double lo = std::max(t0, grid_.boundary(m));
    const double hi = std::min(t1, grid_.boundary(m + 1));
    if (hi > lo) sum += values_[m] * (hi - lo);
  }
  return sum;
}

PiecewiseConstantFn& PiecewiseConstantFn::operator+=(const PiecewiseConstantFn& other) {
  if (!(other.grid_ == grid_)) throw DomainError("cannot add functions on different grids");
  for (std::size_t m = 0; m < values_.size(); ++m) values_[m] += other.values_[m];
  return *this;
}

EventSequence EventSequence::from_unsorted(UserId user, std::vector<double> times, double jitter) {
  std::stable_sort(times.begin(), times.end());
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] <= times[i - 1]) times[i] = times[i - 1] + jitter;
  }
  return {std::move(user), std::move(times)};
}

void Network::add_follow(const UserId& broadcaster, const UserId& follower) {
  if (broadcaster == follower) throw DomainError("user " + broadcaster + " cannot follow itself");
  if (followers_[broadcaster].insert(follower).second) {
    followees_[follower].insert(broadcaster);
    ++edges_;
  }
}

namespace {
const std::set<UserId>& empty_set() {
  static const std::set<UserId> empty;
  return empty;
}
}  // namespace

const std::set<UserId>& Network::followers(const UserId& broadcaster) const {
  auto it = followers_.find(broadcaster);
  return it == followers_.end() ? empty_set() : it->second;
}

const std::set<UserId>& Network::followees(const UserId& follower) const {
  auto it = followees_.find(follower);
  return it == followees_.end() ? empty_set() : it->second;
}

bool Network::follows(const UserId& follower, const UserId& broadcaster) const {
  return followers(broadcaster).contains(follower);
}

namespace {

PiecewiseConstantFn sum_followees(const Network& network, const IntensityMap& intensities,
                                  const UserId* excluded, const UserId& v, const TimeGrid& grid) {
  auto sum = PiecewiseConstantFn::zeros(grid);
  for (const auto& w : network.followees(v)) {
    if (excluded != nullptr && w == *excluded) continue;
    auto it = intensities.find(w);
    if (it == intensities.end()) continue;
    if (!(it->second.grid() == grid)) {
      throw DomainError("intensity of " + w + " is on a different grid");
    }
    sum += it->second;
  }
  return sum;
}

}  // namespace

PiecewiseConstantFn feed_rate_excluding(const Network& network, const IntensityMap& intensities,
                                        const UserId& u, const UserId& v, const TimeGrid& grid) {
  if (!network.follows(v, u)) throw DomainError(v + " does not follow " + u);
  return sum_followees(network, intensities, &u, v, grid);
}

PiecewiseConstantFn feed_rate(const Network& network, const IntensityMap& intensities,
                              const UserId& v, const TimeGrid& grid) {
  return sum_followees(network, intensities, nullptr, v, grid);
}

}  // namespace vshape
