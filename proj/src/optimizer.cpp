#include "vshape/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vshape/errors.hpp"
#include "vshape/numeric.hpp"
#include "vshape/parallel.hpp"
#include "vshape/visibility.hpp"

namespace vshape {

std::string_view to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::avm ? "avm" : "mvm";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "avm") return ObjectiveKind::avm;
  if (name == "mvm") return ObjectiveKind::mvm;
  throw ValidationError("unknown objective '" + std::string(name) + "' (valid: avm, mvm)");
}

void BroadcastProblem::validate() const {
  if (followers.empty()) throw DomainError("broadcast problem has no followers");
  if (k == 0) throw DomainError("rank threshold k must be at least 1");
  if (!(budget > 0.0) || !std::isfinite(budget)) throw DomainError("budget must be positive and finite");
  if (objective == ObjectiveKind::mvm && (mvm_n == 0 || mvm_n > followers.size())) {
    throw ValidationError("mvm n = " + std::to_string(mvm_n) + " must lie in [1, " +
                          std::to_string(followers.size()) + "]");
  }
  for (const auto& f : followers) {
    if (!(f.feed.grid() == grid) || !(f.significance.grid() == grid)) {
      throw DomainError("follower " + f.id + " is defined on a different grid");
    }
  }
}

std::vector<double> follower_visibilities(const BroadcastProblem& problem,
                                          std::span<const double> rates, std::size_t threads) {
  if (rates.size() != problem.grid.pieces()) throw DomainError("rates do not match the grid");
  std::vector<double> out(problem.followers.size(), 0.0);
  const double width = problem.grid.width();
  parallel_for(out.size(), threads, [&](std::size_t v) {
    const auto& f = problem.followers[v];
    out[v] = visibility_value(rates, f.feed.values(), f.significance.values(), width, problem.k);
  });
  return out;
}

namespace {

// Followers ordered by (visibility, id); the first n form the MVM active set.
std::vector<std::size_t> smallest_followers(const BroadcastProblem& problem,
                                            std::span<const double> visibilities, std::size_t n) {
  std::vector<std::size_t> order(visibilities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (visibilities[a] != visibilities[b]) return visibilities[a] < visibilities[b];
    return problem.followers[a].id < problem.followers[b].id;
  });
  order.resize(n);
  return order;
}

std::vector<double> follower_gradient(const BroadcastProblem& problem, const Follower& f,
                                      std::span<const double> rates) {
  const double width = problem.grid.width();
  if (problem.k == 1) return gradient_v1(rates, f.feed.values(), width, f.significance.values());
  return gradient_vk(rates, f.feed.values(), problem.k, width, f.significance.values());
}

// Sum of follower gradients, reduced in follower order.
std::vector<double> summed_gradient(const BroadcastProblem& problem,
                                    std::span<const std::size_t> members,
                                    std::span<const double> rates, std::size_t threads) {
  std::vector<std::vector<double>> parts(members.size());
  parallel_for(members.size(), threads, [&](std::size_t i) {
    parts[i] = follower_gradient(problem, problem.followers[members[i]], rates);
  });
  std::vector<double> out(rates.size(), 0.0);
  for (std::size_t m = 0; m < rates.size(); ++m) {
    CompensatedSum acc;
    for (const auto& p : parts) acc.add(p[m]);
    out[m] = acc.value();
  }
  return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < x.size(); ++i) acc.add(x[i] * y[i]);
  return acc.value();
}

double max_abs(std::span<const double> x) {
  double out = 0.0;
  for (double v : x) out = std::max(out, std::abs(v));
  return out;
}

// Iterates live on normalized masses x = c * width with constraint sum(x) <= C.
struct MassSpace {
  const BroadcastProblem& problem;
  std::size_t threads;

  std::vector<double> rates(std::span<const double> masses) const {
    std::vector<double> out(masses.begin(), masses.end());
    for (double& v : out) v /= problem.grid.width();
    return out;
  }
  std::vector<double> project(std::span<const double> masses) const {
    return project_budget(masses, problem.budget, 1.0);
  }
  std::vector<double> visibilities(std::span<const double> masses) const {
    return follower_visibilities(problem, rates(masses), threads);
  }
  std::vector<double> gradient(std::span<const std::size_t> members,
                               std::span<const double> masses) const {
    auto g = summed_gradient(problem, members, rates(masses), threads);
    for (double& v : g) v /= problem.grid.width();
    return g;
  }
  std::vector<double> uniform() const {
    const auto pieces = problem.grid.pieces();
    return std::vector<double>(pieces, problem.budget / static_cast<double>(pieces));
  }
};

std::vector<double> step_and_project(const MassSpace& space, std::span<const double> x,
                                     std::span<const double> g, double t) {
  std::vector<double> trial(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + t * g[i];
  return space.project(trial);
}

double relative_change(double previous, double current) {
  const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
  return std::abs(current - previous) / scale;
}

Solution finish(const BroadcastProblem& problem, const MassSpace& space,
                std::span<const double> masses, std::vector<double> visibilities,
                std::vector<double> trace, bool converged, std::size_t iterations) {
  Solution out;
  out.rates = space.rates(masses);
  out.objective = objective_value(problem, visibilities);
  out.per_follower = std::move(visibilities);
  out.trace = std::move(trace);
  out.converged = converged;
  out.iterations = iterations;
  return out;
}

}  // namespace

double objective_value(const BroadcastProblem& problem, std::span<const double> visibilities) {
  if (problem.objective == ObjectiveKind::avm) return compensated_sum(visibilities);
  CompensatedSum acc;
  for (std::size_t v : smallest_followers(problem, visibilities, problem.mvm_n)) acc.add(visibilities[v]);
  return acc.value();
}

Solution solve_avm(const BroadcastProblem& input, const SolverOptions& options) {
  BroadcastProblem problem = input;
  problem.objective = ObjectiveKind::avm;
  problem.validate();
  const MassSpace space{problem, options.threads};
  std::vector<std::size_t> everyone(problem.followers.size());
  std::iota(everyone.begin(), everyone.end(), 0);

  auto x = space.uniform();
  auto vis = space.visibilities(x);
  double value = compensated_sum(vis);
  auto grad = space.gradient(everyone, x);
  double step = options.initial_step;
  std::vector<double> trace;
  std::size_t streak = 0;
  bool converged = false;
  std::size_t iter = 0;

  for (; iter < options.max_iterations; ++iter) {
    // Projected Armijo arc search along P(x + t g).
    std::vector<double> trial;
    std::vector<double> trial_vis;
    double trial_value = value;
    bool accepted = false;
    double t = step;
    for (int tries = 0; tries < 60; ++tries, t *= options.shrink) {
      trial = step_and_project(space, x, grad, t);
      std::vector<double> d(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) d[i] = trial[i] - x[i];
      if (max_abs(d) == 0.0) break;
      trial_vis = space.visibilities(trial);
      trial_value = compensated_sum(trial_vis);
      if (trial_value >= value + options.armijo * dot(grad, d)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Either a fixed point of the projected step or no ascent left at
      // machine precision; both mean the iterate is optimal to tolerance.
      converged = true;
      break;
    }
    auto next_grad = space.gradient(everyone, trial);
    // Barzilai-Borwein step for the next trial (concave: s'y < 0).
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = trial[i] - x[i];
      ss += s * s;
      sy += s * (next_grad[i] - grad[i]);
    }
    step = sy < 0.0 ? std::clamp(ss / -sy, 1e-10, 1e10) : std::min(t / options.shrink, 1e10);

    const double change = relative_change(value, trial_value);
    x = std::move(trial);
    vis = std::move(trial_vis);
    value = trial_value;
    grad = std::move(next_grad);
    trace.push_back(value);
    streak = change < options.tolerance ? streak + 1 : 0;
    if (streak >= options.patience) {
      converged = true;
      ++iter;
      break;
    }
  }
  return finish(problem, space, x, std::move(vis), std::move(trace), converged, iter);
}

Solution solve_mvm(const BroadcastProblem& input, const SolverOptions& options) {
  BroadcastProblem problem = input;
  problem.objective = ObjectiveKind::mvm;
  problem.validate();
  const MassSpace space{problem, options.threads};
  const std::size_t n = problem.mvm_n;

  auto x = space.uniform();
  auto vis = space.visibilities(x);
  double value = objective_value(problem, vis);
  auto best_x = x;
  auto best_vis = vis;
  double best_value = value;

  double step = options.initial_step;
  std::size_t supergradient_steps = 0;
  std::size_t streak = 0;
  bool converged = false;
  std::vector<double> trace;
  std::size_t iter = 0;

  for (; iter < options.max_iterations; ++iter) {
    const auto active = smallest_followers(problem, vis, n);
    const auto grad = space.gradient(active, x);

    // Monotone projected step on the true objective while it is locally
    // smooth; falls back to a diminishing supergradient step at kinks.
    bool accepted = false;
    bool stationary = false;
    std::vector<double> trial;
    std::vector<double> trial_vis;
    double trial_value = value;
    double t = step;
    for (int tries = 0; tries < 8; ++tries, t *= options.shrink) {
      trial = step_and_project(space, x, grad, t);
      std::vector<double> d(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) d[i] = trial[i] - x[i];
      if (max_abs(d) == 0.0) {
        stationary = true;
        break;
      }
      trial_vis = space.visibilities(trial);
      trial_value = objective_value(problem, trial_vis);
      if (trial_value >= value + options.armijo * dot(grad, d)) {
        accepted = true;
        break;
      }
    }
    if (stationary) {
      // A supergradient whose projected step vanishes certifies optimality.
      converged = true;
      break;
    }
    double change = 0.0;
    if (accepted) {
      change = relative_change(value, trial_value);
      step = std::min(t / options.shrink, 1e10);
      x = std::move(trial);
      vis = std::move(trial_vis);
      value = trial_value;
    } else {
      ++supergradient_steps;
      double norm = 0.0;
      for (double g : grad) norm += g * g;
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        converged = true;
        break;
      }
      const double length = options.mvm_step_scale * problem.budget /
                            std::sqrt(static_cast<double>(supergradient_steps));
      x = step_and_project(space, x, grad, length / norm);
      vis = space.visibilities(x);
      value = objective_value(problem, vis);
      change = 1.0;
    }
    if (value > best_value) {
      best_value = value;
      best_x = x;
      best_vis = vis;
    }
    trace.push_back(best_value);
    streak = accepted && change < options.tolerance ? streak + 1 : 0;
    if (streak >= options.patience) {
      converged = true;
      ++iter;
      break;
    }
  }
  return finish(problem, space, best_x, std::move(best_vis), std::move(trace), converged, iter);
}

Solution solve(const BroadcastProblem& problem, const SolverOptions& options) {
  return problem.objective == ObjectiveKind::avm ? solve_avm(problem, options)
                                                 : solve_mvm(problem, options);
}

Solution evaluate_allocation(const BroadcastProblem& problem, std::vector<double> rates,
                             std::size_t threads) {
  problem.validate();
  Solution out;
  out.per_follower = follower_visibilities(problem, rates, threads);
  out.objective = objective_value(problem, out.per_follower);
  out.rates = std::move(rates);
  out.converged = true;
  return out;
}

}  // namespace vshape
