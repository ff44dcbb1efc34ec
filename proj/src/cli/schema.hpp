#pragma once

#include "json.hpp"

#include <string>
#include <vector>

#include "vshape/data.hpp"
#include "vshape/optimizer.hpp"

namespace vshape::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Envelope shared by every JSON output.
Json envelope(const std::string& format, const Json& config);
/// Pretty-printed with a trailing newline.
std::string dump(const Json& doc);

/// Parses a JSON file; syntax errors become ValidationError.
Json load_json(const std::string& path);
/// Checks the format tag and version of a loaded document.
void expect_format(const Json& doc, const std::string& format, const std::string& source);

Json grid_to_json(const TimeGrid& grid);
TimeGrid grid_from_json(const Json& j, const std::string& source);

Json profiles_to_json(const ProfileSet& profiles, double window_start, double window_end);
ProfileSet profiles_from_json(const Json& doc, const std::string& source);

/// What later commands need from a solution file.
struct StoredSolution {
  TimeGrid grid;
  UserId broadcaster;
  std::size_t k = 1;
  double budget = 0.0;
  ObjectiveKind objective = ObjectiveKind::avm;
  std::size_t mvm_n = 1;
  std::vector<double> rates;
};

Json solution_to_json(const BroadcastProblem& problem, const UserId& broadcaster,
                      const std::string& allocation, const Solution& solution);
StoredSolution solution_from_json(const Json& doc, const std::string& source);

}  // namespace vshape::cli
