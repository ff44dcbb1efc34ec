#include <algorithm>
#include <numeric>

#include "vshape/errors.hpp"
#include "vshape/numeric.hpp"
#include "vshape/optimizer.hpp"
#include "vshape/rng.hpp"

namespace vshape {

namespace {

constexpr std::pair<BaselineKind, std::string_view> kBaselineNames[] = {
    {BaselineKind::ravm, "ravm"}, {BaselineKind::iavm, "iavm"},
    {BaselineKind::pavm, "pavm"}, {BaselineKind::rmvm, "rmvm"},
    {BaselineKind::imvm, "imvm"}, {BaselineKind::greedy_mvm, "greedy"},
};

// Scales nonnegative weights so that width * sum(c) == budget. All-zero
// weights fall back to the uniform split.
std::vector<double> allocate_proportionally(std::vector<double> weights,
                                            const BroadcastProblem& problem) {
  const double total = compensated_sum(weights);
  if (!(total > 0.0)) std::fill(weights.begin(), weights.end(), 1.0);
  const double norm = total > 0.0 ? total : static_cast<double>(weights.size());
  for (double& w : weights) w = problem.budget * w / (norm * problem.grid.width());
  return weights;
}

std::vector<double> feed_weights(const BroadcastProblem& problem, bool by_significance) {
  std::vector<double> out(problem.grid.pieces(), 0.0);
  for (std::size_t m = 0; m < out.size(); ++m) {
    CompensatedSum acc;
    for (const auto& f : problem.followers) {
      acc.add(by_significance ? f.significance[m] * f.feed[m] : f.feed[m]);
    }
    out[m] = acc.value();
  }
  return out;
}

std::vector<double> greedy_allocate(const BroadcastProblem& problem,
                                    const SolverOptions& options) {
  const std::size_t rounds =
      problem.objective == ObjectiveKind::mvm ? problem.mvm_n : problem.followers.size();
  const std::size_t pieces = problem.grid.pieces();
  // The uniform start only decides who is served first; the output is the
  // sum of the per-round allocations, which spend C/n each.
  std::vector<double> selector(pieces, problem.budget / (pieces * problem.grid.width()));
  std::vector<double> total(pieces, 0.0);
  for (std::size_t round = 0; round < rounds; ++round) {
    const auto vis = follower_visibilities(problem, round == 0 ? selector : total, options.threads);
    std::size_t least = 0;
    for (std::size_t v = 1; v < vis.size(); ++v) {
      if (vis[v] < vis[least] ||
          (vis[v] == vis[least] && problem.followers[v].id < problem.followers[least].id)) {
        least = v;
      }
    }
    BroadcastProblem single{problem.grid, {problem.followers[least]}, problem.k,
                            problem.budget / static_cast<double>(rounds), ObjectiveKind::avm, 1};
    const auto part = solve_avm(single, options);
    for (std::size_t m = 0; m < pieces; ++m) total[m] += part.rates[m];
  }
  return allocate_proportionally(std::move(total), problem);
}

}  // namespace

std::string_view to_string(BaselineKind kind) {
  for (const auto& [k, name] : kBaselineNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

BaselineKind parse_baseline_kind(std::string_view name) {
  std::string valid;
  for (const auto& [kind, candidate] : kBaselineNames) {
    if (candidate == name) return kind;
    if (!valid.empty()) valid += ", ";
    valid += candidate;
  }
  throw ValidationError("unknown baseline '" + std::string(name) + "' (valid: " + valid + ")");
}

std::vector<double> baseline_allocate(BaselineKind kind, const BroadcastProblem& problem,
                                      std::uint64_t seed, const SolverOptions& options) {
  problem.validate();
  switch (kind) {
    case BaselineKind::ravm:
    case BaselineKind::rmvm: {
      // Uniform Dirichlet weights from normalized exponentials.
      Rng rng(derive_seed(seed, 0x7261766dULL));
      std::vector<double> w(problem.grid.pieces());
      for (double& v : w) v = rng.exponential();
      return allocate_proportionally(std::move(w), problem);
    }
    case BaselineKind::iavm:
    case BaselineKind::imvm:
      return allocate_proportionally(feed_weights(problem, false), problem);
    case BaselineKind::pavm:
      return allocate_proportionally(feed_weights(problem, true), problem);
    case BaselineKind::greedy_mvm:
      return greedy_allocate(problem, options);
  }
  throw ValidationError("unhandled baseline kind");
}

}  // namespace vshape
