#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "support/oracles.hpp"
#include "vshape/errors.hpp"
#include "vshape/optimizer.hpp"
#include "vshape/visibility.hpp"

using namespace vshape;

namespace {

Follower follower(const TimeGrid& grid, std::string id, std::vector<double> mu, std::vector<double> s = {}) {
  if (s.empty()) s.assign(mu.size(), 1.0);
  return {std::move(id), PiecewiseConstantFn(grid, std::move(mu)), PiecewiseConstantFn(grid, std::move(s))};
}

BroadcastProblem random_problem(testing::InstanceGenerator& gen, std::size_t pieces, std::size_t followers,
                                std::size_t k) {
  const TimeGrid grid(static_cast<double>(pieces) * gen.uniform(0.5, 2.0), pieces);
  BroadcastProblem p{grid, {}, k, gen.uniform(0.5, 10.0)};
  for (std::size_t i = 0; i < followers; ++i) {
    p.followers.push_back(follower(grid, "f" + std::to_string(i), gen.rates(pieces, 0.0, 10.0),
                                   gen.rates(pieces, 0.0, 1.0)));
  }
  return p;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(scale, 1e-12));
  return worst;
}

double mass(std::span<const double> c, double width) { return width * std::accumulate(c.begin(), c.end(), 0.0); }

}  // namespace

TEST_CASE("projection examples") {
  auto a = project_budget(std::vector<double>{2.0, 2.0}, 2.0, 1.0);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(1.0));
  auto b = project_budget(std::vector<double>{-1.0, 0.5}, 10.0, 1.0);
  CHECK(b[0] == 0.0);
  CHECK(b[1] == 0.5);
  auto c = project_budget(std::vector<double>{3.0, -1.0}, 2.0, 1.0);
  CHECK(c[0] == doctest::Approx(2.0));
  CHECK(c[1] == 0.0);
}

TEST_CASE("projection matches KKT enumeration") {
  testing::InstanceGenerator gen(51);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = gen.index(1, 4);
    const double width = gen.uniform(0.25, 2.0);
    const double budget = gen.uniform(0.1, 5.0);
    auto c = gen.rates(m, -3.0, 6.0);
    auto got = project_budget(c, budget, width);
    // In mass space the set is the plain simplex-with-slack.
    std::vector<double> masses(m);
    for (std::size_t i = 0; i < m; ++i) masses[i] = c[i] * width;
    auto ref = testing::kkt_projection(masses, budget);
    REQUIRE(ref.size() == m);
    for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(got[i] * width - ref[i]) < 1e-8);
    CHECK(mass(got, width) <= budget + 1e-9);
    for (double v : got) CHECK(v >= 0.0);
  }
}

TEST_CASE("gradient at zero rates and zero feed") {
  for (double width : {0.5, 1.0, 2.0}) {
    auto g = gradient_v1(std::vector<double>{0.0}, std::vector<double>{0.0}, width);
    CHECK(g[0] / width == doctest::Approx(width / 2.0).epsilon(1e-10));
    auto gk = gradient_vk(std::vector<double>{0.0}, std::vector<double>{0.0}, 1, width);
    CHECK(gk[0] == doctest::Approx(g[0]).epsilon(1e-10));
  }
}

TEST_CASE("gradient rejects mismatched lengths") {
  CHECK_THROWS_AS(gradient_v1(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}, 1.0), DomainError);
  CHECK_THROWS_AS(gradient_vk(std::vector<double>{1.0}, std::vector<double>{1.0}, 2, 1.0,
                              std::vector<double>{1.0, 1.0}),
                  DomainError);
  CHECK_THROWS_AS(gradient_vk(std::vector<double>{1.0}, std::vector<double>{1.0}, 0, 1.0), DomainError);
}

TEST_CASE("gradient favours the quiet interval") {
  std::vector<double> c{1.0, 0.0, 0.0};
  std::vector<double> b{5.0, 0.5, 5.0};
  auto g = gradient_v1(c, b, 1.0);
  CHECK(g[1] > g[0]);
  CHECK(g[1] > g[2]);
}

TEST_CASE("gradient from zero rates is positive for every k") {
  testing::InstanceGenerator gen(53);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = gen.index(1, 8);
    auto b = gen.rates(m, 0.0, 10.0);
    auto g = gradient_vk(std::vector<double>(m, 0.0), b, gen.index(1, 20), gen.uniform(0.2, 2.0));
    for (double v : g) CHECK(v > 0.0);
  }
}

TEST_CASE("gradients match central finite differences") {
  testing::InstanceGenerator gen(57);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = gen.index(1, 8);
    const std::size_t k = trial < 40 ? 1 : gen.index(1, 10);
    const double width = gen.uniform(0.2, 2.0);
    auto c = gen.rates(m, 0.05, 5.0);
    auto b = gen.rates(m, 0.0, 5.0);
    auto s = gen.rates(m, 0.0, 1.0);
    auto f = [&](std::span<const double> x) { return visibility_value(x, b, s, width, k); };
    auto fd = testing::central_difference(f, c, 1e-5);
    auto g = gradient_vk(c, b, k, width, s);
    CHECK(max_relative_error(g, fd) < 1e-6);
    if (k == 1) {
      auto g1 = gradient_v1(c, b, width, s);
      CHECK(max_relative_error(g1, fd) < 1e-6);
      for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(g1[i] - g[i]) <= 1e-10 * std::max(1.0, std::abs(g[i])));
    }
  }
}

TEST_CASE("k = 1 gradients agree near the small-mass branch") {
  // Masses straddling the switch between the literal and the moment form.
  for (double mass_scale : {1e-6, 0.01, 0.049, 0.05, 0.051, 0.2}) {
    std::vector<double> c{mass_scale, 2 * mass_scale, 0.5 * mass_scale};
    std::vector<double> b{mass_scale, 0.0, 3 * mass_scale};
    auto g1 = gradient_v1(c, b, 1.0);
    auto gk = gradient_vk(c, b, 1, 1.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(g1[i] - gk[i]) <= 1e-10);
  }
}

TEST_CASE("problem validation") {
  const TimeGrid grid(2.0, 2);
  BroadcastProblem p{grid, {}, 1, 1.0};
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.followers.push_back(follower(grid, "a", {1.0, 1.0}));
  p.validate();
  p.budget = 0.0;
  CHECK_THROWS(p.validate());
  p.budget = 1.0;
  p.k = 0;
  CHECK_THROWS(p.validate());
  p.k = 1;
  p.objective = ObjectiveKind::mvm;
  p.mvm_n = 2;
  CHECK_THROWS(p.validate());
  CHECK_THROWS_AS(solve_avm(BroadcastProblem{grid, {}, 1, 1.0}), DomainError);
  CHECK(parse_objective_kind("mvm") == ObjectiveKind::mvm);
  CHECK_THROWS_AS(parse_objective_kind("minimax"), ValidationError);
}

TEST_CASE("solve_avm puts mass on the quiet piece") {
  const TimeGrid grid(2.0, 2);
  BroadcastProblem p{grid, {follower(grid, "a", {10.0, 0.1})}, 1, 1.0};
  auto sol = solve_avm(p);
  CHECK(sol.rates[1] * grid.width() >= 0.95);
  auto objective = [&](std::span<const double> c) { return visibility_value(c, p.followers[0].feed.values(), {}, 1.0, 1); };
  auto [best, share] = testing::grid_search_two_pieces(objective, 1.0, 1.0, 1e-3);
  CHECK(sol.objective >= best - 1e-3);
  CHECK(std::abs(sol.objective - best) < 1e-3);
}

TEST_CASE("solve_avm beats uniform and spikes under a constant feed") {
  const TimeGrid grid(6.0, 6);
  BroadcastProblem p{grid, {follower(grid, "a", std::vector<double>(6, 2.0))}, 1, 3.0};
  auto sol = solve_avm(p);
  CHECK(sol.objective >= evaluate_allocation(p, std::vector<double>(6, 0.5)).objective - 1e-9);
  for (std::size_t m = 0; m < 6; ++m) {
    std::vector<double> spike(6, 0.0);
    spike[m] = 3.0;
    CHECK(sol.objective >= evaluate_allocation(p, spike).objective - 1e-9);
  }
}

TEST_CASE("solve_avm solution invariants") {
  testing::InstanceGenerator gen(59);
  for (int trial = 0; trial < 15; ++trial) {
    auto p = random_problem(gen, gen.index(1, 8), gen.index(1, 5), gen.index(1, 4));
    auto sol = solve_avm(p);
    for (double v : sol.rates) CHECK(v >= 0.0);
    CHECK(mass(sol.rates, p.grid.width()) <= p.budget + 1e-9);
    for (std::size_t i = 1; i < sol.trace.size(); ++i) CHECK(sol.trace[i] >= sol.trace[i - 1] - 1e-12);
    CHECK(sol.per_follower.size() == p.followers.size());
    CHECK(std::accumulate(sol.per_follower.begin(), sol.per_follower.end(), 0.0) ==
          doctest::Approx(sol.objective).epsilon(1e-12));
    for (auto kind : {BaselineKind::ravm, BaselineKind::iavm, BaselineKind::pavm}) {
      CHECK(sol.objective >= evaluate_allocation(p, baseline_allocate(kind, p, 3)).objective - 1e-6);
    }
    auto doubled = p;
    doubled.budget *= 2.0;
    CHECK(solve_avm(doubled).objective >= sol.objective - 1e-9);
  }
}

TEST_CASE("solve_avm matches grid search on two pieces") {
  testing::InstanceGenerator gen(61);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t k = trial % 2 + 1;
    auto p = random_problem(gen, 2, 1, k);
    const auto& f = p.followers[0];
    auto objective = [&](std::span<const double> c) {
      return visibility_value(c, f.feed.values(), f.significance.values(), p.grid.width(), k);
    };
    auto [best, share] = testing::grid_search_two_pieces(objective, p.budget, p.grid.width(), 1e-3);
    auto sol = solve_avm(p);
    CHECK(std::abs(sol.objective - best) < 1e-3);
    CHECK(sol.objective >= best - 1e-9);
  }
}

TEST_CASE("solve is deterministic and thread-count independent") {
  testing::InstanceGenerator gen(63);
  auto p = random_problem(gen, 6, 12, 2);
  SolverOptions one;
  SolverOptions four;
  four.threads = 4;
  auto a = solve_avm(p, one);
  auto b = solve_avm(p, four);
  CHECK(a.rates == b.rates);
  CHECK(a.objective == b.objective);
  p.objective = ObjectiveKind::mvm;
  p.mvm_n = 3;
  CHECK(solve(p, one).rates == solve(p, four).rates);
}

TEST_CASE("mvm with every follower matches avm") {
  testing::InstanceGenerator gen(67);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = random_problem(gen, gen.index(2, 6), gen.index(1, 4), gen.index(1, 3));
    auto avm = solve_avm(p);
    p.objective = ObjectiveKind::mvm;
    p.mvm_n = p.followers.size();
    auto mvm = solve_mvm(p);
    CHECK(std::abs(mvm.objective - avm.objective) <= 1e-4 * std::abs(avm.objective));
  }
}

TEST_CASE("mvm with one follower is avm") {
  const TimeGrid grid(3.0, 3);
  BroadcastProblem p{grid, {follower(grid, "a", {1.0, 4.0, 0.5})}, 2, 2.0, ObjectiveKind::mvm, 1};
  auto mvm = solve(p);
  p.objective = ObjectiveKind::avm;
  auto avm = solve(p);
  CHECK(std::abs(mvm.objective - avm.objective) <= 1e-4 * avm.objective);
}

TEST_CASE("mvm equalizes two identical followers") {
  const TimeGrid grid(2.0, 2);
  BroadcastProblem p{grid, {follower(grid, "a", {3.0, 0.5}), follower(grid, "b", {3.0, 0.5})}, 1, 1.5,
                     ObjectiveKind::mvm, 1};
  auto sol = solve_mvm(p);
  CHECK(std::abs(sol.per_follower[0] - sol.per_follower[1]) < 1e-4);
}

TEST_CASE("mvm value ignores follower order and improves on the start") {
  testing::InstanceGenerator gen(71);
  auto p = random_problem(gen, 4, 5, 1);
  p.objective = ObjectiveKind::mvm;
  p.mvm_n = 2;
  auto sol = solve_mvm(p);
  auto reversed = p;
  std::reverse(reversed.followers.begin(), reversed.followers.end());
  auto rsol = solve_mvm(reversed);
  CHECK(std::abs(sol.objective - rsol.objective) <= 1e-4 * std::max(1.0, sol.objective));
  std::vector<double> uniform(4, p.budget / p.grid.horizon());
  CHECK(sol.objective >= evaluate_allocation(p, uniform).objective - 1e-12);
  for (std::size_t i = 1; i < sol.trace.size(); ++i) CHECK(sol.trace[i] >= sol.trace[i - 1]);
  CHECK(mass(sol.rates, p.grid.width()) <= p.budget + 1e-9);
}

TEST_CASE("objective_value picks the smallest n with id tie-break") {
  const TimeGrid grid(1.0, 1);
  BroadcastProblem p{grid,
                     {follower(grid, "b", {1.0}), follower(grid, "a", {1.0}), follower(grid, "c", {1.0})},
                     1, 1.0, ObjectiveKind::mvm, 2};
  CHECK(objective_value(p, std::vector<double>{0.5, 0.2, 0.9}) == doctest::Approx(0.7));
  p.objective = ObjectiveKind::avm;
  CHECK(objective_value(p, std::vector<double>{0.5, 0.2, 0.9}) == doctest::Approx(1.6));
}

TEST_CASE("baseline examples") {
  const TimeGrid grid(2.0, 2);
  BroadcastProblem p{grid, {follower(grid, "a", {1.5, 2.0}, {1.0, 0.0}), follower(grid, "b", {0.5, 4.0}, {1.0, 0.0})},
                     1, 4.0};
  auto iavm = baseline_allocate(BaselineKind::iavm, p, 0);
  CHECK(iavm[0] == doctest::Approx(1.0));
  CHECK(iavm[1] == doctest::Approx(3.0));
  auto pavm = baseline_allocate(BaselineKind::pavm, p, 0);
  CHECK(pavm[0] == doctest::Approx(4.0));
  CHECK(pavm[1] == 0.0);
  auto r1 = baseline_allocate(BaselineKind::ravm, p, 9);
  auto r2 = baseline_allocate(BaselineKind::ravm, p, 9);
  CHECK(r1 == r2);
  CHECK(mass(r1, 1.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(baseline_allocate(BaselineKind::ravm, p, 10) != r1);
}

TEST_CASE("proportional baselines fall back to uniform on zero weights") {
  const TimeGrid grid(3.0, 3);
  BroadcastProblem p{grid, {follower(grid, "a", {0.0, 0.0, 0.0})}, 1, 3.0};
  for (auto kind : {BaselineKind::iavm, BaselineKind::pavm, BaselineKind::imvm}) {
    auto c = baseline_allocate(kind, p, 0);
    for (double v : c) CHECK(v == doctest::Approx(1.0));
  }
}

TEST_CASE("every baseline is feasible and uses the whole budget") {
  testing::InstanceGenerator gen(73);
  auto p = random_problem(gen, 5, 4, 2);
  p.objective = ObjectiveKind::mvm;
  p.mvm_n = 2;
  for (auto kind : {BaselineKind::ravm, BaselineKind::iavm, BaselineKind::pavm, BaselineKind::rmvm,
                    BaselineKind::imvm, BaselineKind::greedy_mvm}) {
    auto c = baseline_allocate(kind, p, 17);
    REQUIRE(c.size() == 5);
    for (double v : c) CHECK(v >= 0.0);
    CHECK(mass(c, p.grid.width()) == doctest::Approx(p.budget).epsilon(1e-12));
    CHECK(parse_baseline_kind(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_baseline_kind("nope"), ValidationError);
}
