#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vshape/intensity.hpp"

namespace vshape {

enum class ObjectiveKind { avm, mvm };

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(std::string_view name);

struct Follower {
  UserId id;
  PiecewiseConstantFn feed;          // mu_v: feed rate due to other broadcasters
  PiecewiseConstantFn significance;  // s_v
};

struct BroadcastProblem {
  TimeGrid grid;
  std::vector<Follower> followers;
  std::size_t k = 1;
  double budget = 1.0;  // expected posts per horizon
  ObjectiveKind objective = ObjectiveKind::avm;
  std::size_t mvm_n = 1;

  /// Throws DomainError / ValidationError on an inconsistent instance.
  void validate() const;
};

struct SolverOptions {
  double tolerance = 1e-8;        // relative objective change
  std::size_t patience = 5;       // consecutive small changes before stopping
  std::size_t max_iterations = 10000;
  double initial_step = 1.0;      // on normalized masses
  double armijo = 1e-4;
  double shrink = 0.5;
  double mvm_step_scale = 0.1;    // supergradient step s0 as a fraction of the budget
  std::size_t threads = 1;
};

struct Solution {
  std::vector<double> rates;        // c_m, posts per time unit
  double objective = 0.0;
  std::vector<double> per_follower;  // visibility per follower, problem order
  std::vector<double> trace;         // objective after each iteration
  bool converged = false;
  std::size_t iterations = 0;
};

/// Exact gradient of V(1) with respect to the rates c, assembled from the
/// local interval term plus the downstream chain through the boundary
/// probabilities. `significance` may be empty (unit weight).
std::vector<double> gradient_v1(std::span<const double> rates, std::span<const double> feed,
                                double width, std::span<const double> significance = {});

/// Gradient of V(k) by forward sensitivity of the per-interval closed form.
std::vector<double> gradient_vk(std::span<const double> rates, std::span<const double> feed,
                                std::size_t k, double width,
                                std::span<const double> significance = {});

/// Euclidean projection onto {c >= 0, width * sum(c) <= budget}.
std::vector<double> project_budget(std::span<const double> rates, double budget, double width);

/// Visibility of each follower under `rates`.
std::vector<double> follower_visibilities(const BroadcastProblem& problem,
                                          std::span<const double> rates, std::size_t threads = 1);

/// AVM: sum of visibilities; MVM: sum of the n smallest (ties by follower id).
double objective_value(const BroadcastProblem& problem, std::span<const double> visibilities);

Solution solve_avm(const BroadcastProblem& problem, const SolverOptions& options = {});
Solution solve_mvm(const BroadcastProblem& problem, const SolverOptions& options = {});
/// Dispatches on problem.objective.
Solution solve(const BroadcastProblem& problem, const SolverOptions& options = {});

enum class BaselineKind { ravm, iavm, pavm, rmvm, imvm, greedy_mvm };

std::string_view to_string(BaselineKind kind);
/// Throws ValidationError listing the valid names.
BaselineKind parse_baseline_kind(std::string_view name);

std::vector<double> baseline_allocate(BaselineKind kind, const BroadcastProblem& problem,
                                      std::uint64_t seed, const SolverOptions& options = {});

/// Evaluates an arbitrary allocation as a Solution (no iterations).
Solution evaluate_allocation(const BroadcastProblem& problem, std::vector<double> rates,
                             std::size_t threads = 1);

}  // namespace vshape
