#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vshape/errors.hpp"
#include "vshape/simulator.hpp"
#include "vshape/visibility.hpp"

using namespace vshape;

namespace {
PiecewiseConstantFn fn(double horizon, std::vector<double> v) {
  const auto m = v.size();
  return {TimeGrid(horizon, m), std::move(v)};
}

EventSequence seq(std::vector<double> t) { return {"x", std::move(t)}; }

double absent_measure(const RankTrajectory& traj) {
  double total = 0.0;
  double from = 0.0;
  std::size_t rank = kRankAbsent;
  for (const auto& bp : traj.breakpoints) {
    if (rank == kRankAbsent) total += bp.time - from;
    from = bp.time;
    rank = bp.rank;
  }
  if (rank == kRankAbsent) total += traj.horizon - from;
  return total;
}
}  // namespace

TEST_CASE("rng variates are reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
  Rng p(7);
  CHECK(p.poisson(0.0) == 0);
  double sum = 0.0;
  for (int i = 0; i < 2000; ++i) sum += static_cast<double>(p.poisson(1234.5));
  CHECK(sum / 2000 == doctest::Approx(1234.5).epsilon(0.01));
}

TEST_CASE("sample_poisson examples") {
  CHECK(sample_poisson(fn(24.0, {0.0}), 1).empty());
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto events = sample_poisson(fn(2.0, {10.0, 0.0}), seed);
    for (double t : events.times) CHECK(t < 1.0);
    for (std::size_t i = 1; i < events.size(); ++i) CHECK(events.times[i] > events.times[i - 1]);
  }
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) total += static_cast<double>(sample_poisson(fn(24.0, {3.0}), seed).size());
  CHECK(std::abs(total / 10000 - 72.0) < 3.0 * std::sqrt(72.0) / 100.0);
}

TEST_CASE("sample_poisson is deterministic given the seed") {
  const auto f = fn(6.0, {1.0, 4.0, 0.5});
  auto a = sample_poisson(f, 99);
  auto b = sample_poisson(f, 99);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.times.data(), b.times.data(), a.size() * sizeof(double)) == 0);
  CHECK(sample_poisson(f, 100).times != a.times);
}

TEST_CASE("per-piece sampling and thinning agree in distribution") {
  const auto f = fn(4.0, {0.5, 3.0, 0.0, 1.5});
  const std::size_t draws = 20000;
  std::vector<double> direct(4, 0.0), thinned(4, 0.0);
  for (std::uint64_t seed = 0; seed < draws; ++seed) {
    for (double t : sample_poisson(f, seed).times) direct[f.grid().piece_of(t)] += 1.0;
    for (double t : testing::thinning_sample(f, seed + 1'000'000)) thinned[f.grid().piece_of(t)] += 1.0;
  }
  for (std::size_t m = 0; m < 4; ++m) {
    const double expected = f[m] * f.grid().width();
    // Each estimate has standard error sqrt(expected / draws); allow 4 of them.
    const double tol = 4.0 * std::sqrt(std::max(expected, 1e-12) / draws) + 1e-12;
    CHECK(std::abs(direct[m] / draws - expected) < tol);
    CHECK(std::abs(thinned[m] / draws - expected) < tol);
  }
}

TEST_CASE("replay_feed examples") {
  auto solo = replay_feed(seq({1.0}), seq({}), 20, 5.0);
  CHECK(solo.rank_at(0.5) == kRankAbsent);
  CHECK(solo.rank_at(1.0) == 1);
  CHECK(solo.rank_at(4.9) == 1);

  auto traced = replay_feed(seq({1.0}), seq({2.0, 3.0}), 2, 5.0);
  CHECK(traced.rank_at(1.5) == 1);
  CHECK(traced.rank_at(2.5) == 2);
  CHECK(traced.rank_at(3.0) == kRankAbsent);
  CHECK(traced.rank_at(4.0) == kRankAbsent);
  CHECK(empirical_visibility(traced, 1) == doctest::Approx(1.0));
  CHECK(empirical_visibility(traced, 2) == doctest::Approx(2.0));
  CHECK_THROWS_AS(empirical_visibility(traced, 3), DomainError);

  auto silent = replay_feed(seq({}), seq({0.5, 1.5}), 20, 3.0);
  CHECK(empirical_visibility(silent, 20) == 0.0);
}

TEST_CASE("ties deliver the other story first") {
  auto traj = replay_feed(seq({1.0}), seq({1.0}), 20, 2.0);
  CHECK(traj.rank_at(1.5) == 1);
  auto later = replay_feed(seq({1.0}), seq({1.0, 1.5}), 20, 2.0);
  CHECK(later.rank_at(1.7) == 2);
}

TEST_CASE("significance weighting of the empirical measure") {
  const auto s = fn(3.0, {1.0, 0.0, 0.0});
  auto traj = replay_feed(seq({1.0}), seq({2.0}), 20, 3.0);
  CHECK(empirical_visibility(traj, 1, s) == 0.0);
  const auto half = fn(3.0, {0.5, 0.5, 0.5});
  CHECK(empirical_visibility(traj, 2, half) == doctest::Approx(1.0));
}

TEST_CASE("replay agrees with an explicit queue and conserves time") {
  testing::InstanceGenerator gen(41);
  for (int trial = 0; trial < 300; ++trial) {
    const double horizon = gen.uniform(1.0, 10.0);
    const auto lam = fn(horizon, gen.rates(3, 0.0, 4.0));
    const auto mu = fn(horizon, gen.rates(3, 0.0, 8.0));
    const auto own = sample_poisson(lam, 2 * trial);
    const auto other = sample_poisson(mu, 2 * trial + 1);
    const std::size_t capacity = gen.index(1, 20);
    auto traj = replay_feed(own, other, capacity, horizon);
    for (std::size_t k = 1; k <= capacity; ++k) {
      CHECK(empirical_visibility(traj, k) ==
            doctest::Approx(testing::queue_reference_visibility(own.times, other.times, capacity, k, horizon))
                .epsilon(1e-12));
    }
    CHECK(empirical_visibility(traj, capacity) + absent_measure(traj) == doctest::Approx(horizon).epsilon(1e-12));
    auto one = replay_feed(own, other, 1, horizon);
    auto twenty = replay_feed(own, other, 20, horizon);
    CHECK(empirical_visibility(one, 1) == empirical_visibility(twenty, 1));
  }
}

TEST_CASE("monte carlo examples") {
  SimulationOptions opts;
  opts.runs = 100000;
  opts.seed = 5;
  auto est = monte_carlo_visibility(fn(1.0, {1.0}), fn(1.0, {1.0}), 1, nullptr, opts);
  CHECK(std::abs(est.mean - 0.28383382080915387) < 3.0 * est.std_error);

  opts.runs = 100;
  auto zero = monte_carlo_visibility(fn(2.0, {0.0, 0.0}), fn(2.0, {3.0, 1.0}), 1, nullptr, opts);
  CHECK(zero.mean == 0.0);
  CHECK(zero.std_error == 0.0);

  opts.runs = 20000;
  const double expected = 10.0 - (1.0 - std::exp(-50.0)) / 5.0;
  auto lonely = monte_carlo_visibility(fn(10.0, {5.0}), fn(10.0, {0.0}), 1, nullptr, opts);
  CHECK(std::abs(lonely.mean - expected) < 3.0 * lonely.std_error + 1e-12);
  auto heldout = heldout_visibility(fn(10.0, {5.0}), seq({}), 1, nullptr, opts);
  CHECK(std::abs(heldout.mean - expected) < 3.0 * heldout.std_error + 1e-12);
  CHECK(heldout_visibility(fn(10.0, {0.0}), seq({1.0, 2.0}), 1, nullptr, opts).mean == 0.0);

  opts.runs = 0;
  CHECK_THROWS_AS(monte_carlo_visibility(fn(1.0, {1.0}), fn(1.0, {1.0}), 1, nullptr, opts), ValidationError);
}

TEST_CASE("held-out replay against a synthetic feed matches the analytic value") {
  const auto lam = fn(4.0, {1.0, 0.3, 2.0, 0.5});
  const auto mu = fn(4.0, {2.0, 4.0, 1.0, 3.0});
  const double analytic = visibility(lam, mu, 2).value;
  // Average over many recorded feeds so the comparison targets the analytic mean.
  std::vector<double> values;
  SimulationOptions opts;
  opts.runs = 20;
  for (std::uint64_t feed = 0; feed < 2000; ++feed) {
    opts.seed = feed;
    values.push_back(heldout_visibility(lam, sample_poisson(mu, 1'000'000 + feed), 2, nullptr, opts).mean);
  }
  auto est = mean_and_std_error(values);
  CHECK(std::abs(est.mean - analytic) < 3.0 * est.std_error);
}

TEST_CASE("monte carlo is bit-identical across reruns and thread counts") {
  const auto lam = fn(3.0, {1.0, 2.0, 0.5});
  const auto mu = fn(3.0, {3.0, 1.0, 2.0});
  const auto s = fn(3.0, {1.0, 0.4, 0.8});
  SimulationOptions opts;
  opts.runs = 500;
  opts.seed = 77;
  auto a = monte_carlo_visibility(lam, mu, 3, &s, opts);
  auto b = monte_carlo_visibility(lam, mu, 3, &s, opts);
  opts.threads = 4;
  auto c = monte_carlo_visibility(lam, mu, 3, &s, opts);
  CHECK(std::memcmp(&a.mean, &b.mean, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.mean, &c.mean, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.std_error, &c.std_error, sizeof(double)) == 0);
  opts.stream = 1;
  CHECK(monte_carlo_visibility(lam, mu, 3, &s, opts).mean != a.mean);
}

TEST_CASE("monte carlo tracks the analytic value on random instances") {
  testing::InstanceGenerator gen(43);
  int within = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t pieces = gen.index(1, 6);
    const TimeGrid grid(gen.uniform(1.0, 6.0), pieces);
    const PiecewiseConstantFn lam(grid, gen.rates(pieces, 0.0, 5.0));
    const PiecewiseConstantFn mu(grid, gen.rates(pieces, 0.0, 5.0));
    const PiecewiseConstantFn s(grid, gen.rates(pieces, 0.0, 1.0));
    const std::size_t k = gen.index(1, 5);
    SimulationOptions opts;
    opts.runs = 4000;
    opts.seed = static_cast<std::uint64_t>(trial);
    auto est = monte_carlo_visibility(lam, mu, k, &s, opts);
    const double analytic = weighted_visibility(lam, mu, s, k).value;
    if (std::abs(est.mean - analytic) <= 3.0 * est.std_error + 1e-12) ++within;
  }
  CHECK(within >= 18);
}
