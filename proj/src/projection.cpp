#include <algorithm>
#include <functional>
#include <vector>

#include "vshape/errors.hpp"
#include "vshape/numeric.hpp"
#include "vshape/optimizer.hpp"

namespace vshape {

namespace {

// Projection of x onto {x >= 0, sum(x) <= budget}.
std::vector<double> project_capped_simplex(std::vector<double> x, double budget) {
  CompensatedSum positive;
  for (double v : x) positive.add(std::max(v, 0.0));
  if (positive.value() <= budget) {
    for (double& v : x) v = std::max(v, 0.0);
    return x;
  }
  // Budget binds: water-filling threshold theta with sum(max(x - theta, 0)) = budget.
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    prefix += sorted[j];
    const double candidate = (prefix - budget) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  for (double& v : x) v = std::max(v - theta, 0.0);
  return x;
}

}  // namespace

std::vector<double> project_budget(std::span<const double> rates, double budget, double width) {
  if (!(budget > 0.0)) throw DomainError("budget must be positive");
  if (!(width > 0.0)) throw DomainError("piece width must be positive");
  // Uniform scaling by the width preserves Euclidean nearest points, so
  // project the masses c * width onto the plain capped simplex.
  std::vector<double> masses(rates.begin(), rates.end());
  for (double& v : masses) v *= width;
  auto projected = project_capped_simplex(std::move(masses), budget);
  for (double& v : projected) v /= width;
  return projected;
}

}  // namespace vshape
