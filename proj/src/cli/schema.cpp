#include "cli/schema.hpp"

#include <cmath>

#include "vshape/errors.hpp"
#include "vshape/io.hpp"

namespace vshape::cli {

namespace {

[[noreturn]] void invalid(const std::string& source, const std::string& message) {
  throw ValidationError(source + ": " + message);
}

std::vector<double> rates_from_json(const Json& j, std::size_t pieces, const std::string& source,
                                    const std::string& what, double upper = INFINITY) {
  if (!j.is_array() || j.size() != pieces) {
    invalid(source, what + " must be an array of " + std::to_string(pieces) + " numbers");
  }
  std::vector<double> out;
  out.reserve(pieces);
  for (const auto& v : j) {
    if (!v.is_number()) invalid(source, what + " must contain numbers only");
    const double x = v.get<double>();
    if (!(x >= 0.0 && x <= upper)) invalid(source, what + " has a value out of range");
    out.push_back(x);
  }
  return out;
}

const Json& field(const Json& j, const char* key, const std::string& source) {
  if (!j.is_object() || !j.contains(key)) invalid(source, std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

Json envelope(const std::string& format, const Json& config) {
  Json doc;
  doc["format"] = format;
  doc["format_version"] = kFormatVersion;
  doc["config"] = config;
  return doc;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

Json load_json(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    invalid(path, std::string("invalid JSON: ") + e.what());
  }
}

void expect_format(const Json& doc, const std::string& format, const std::string& source) {
  if (!doc.is_object() || doc.value("format", "") != format) {
    invalid(source, "not a " + format + " document");
  }
  if (doc.value("format_version", 0) != kFormatVersion) {
    invalid(source, "unsupported format_version (expected " + std::to_string(kFormatVersion) + ")");
  }
}

Json grid_to_json(const TimeGrid& grid) {
  Json j;
  j["T"] = grid.horizon();
  j["M"] = grid.pieces();
  return j;
}

TimeGrid grid_from_json(const Json& j, const std::string& source) {
  const auto& t = field(j, "T", source);
  const auto& m = field(j, "M", source);
  if (!t.is_number() || !m.is_number_unsigned()) invalid(source, "grid needs numeric T and integer M");
  try {
    return TimeGrid(t.get<double>(), m.get<std::size_t>());
  } catch (const DomainError& e) {
    invalid(source, e.what());
  }
}

Json profiles_to_json(const ProfileSet& profiles, double window_start, double window_end) {
  Json doc;
  doc["grid"] = grid_to_json(profiles.grid);
  doc["periods"] = profiles.periods;
  doc["window"] = {{"start", window_start}, {"end", window_end}};
  Json users = Json::array();
  for (const auto& [id, p] : profiles.profiles) {
    Json u;
    u["id"] = id;
    u["events"] = p.events;
    u["lambda"] = std::vector<double>(p.intensity.values().begin(), p.intensity.values().end());
    u["mu"] = std::vector<double>(p.feed.values().begin(), p.feed.values().end());
    u["s"] = std::vector<double>(p.significance.values().begin(), p.significance.values().end());
    users.push_back(std::move(u));
  }
  doc["users"] = std::move(users);
  Json graph = Json::array();
  for (const auto& [u, followers] : profiles.network.adjacency()) {
    for (const auto& v : followers) graph.push_back(Json::array({u, v}));
  }
  doc["graph"] = std::move(graph);
  return doc;
}

ProfileSet profiles_from_json(const Json& doc, const std::string& source) {
  expect_format(doc, "vshape.profiles", source);
  const TimeGrid grid = grid_from_json(field(doc, "grid", source), source);
  const auto& periods = field(doc, "periods", source);
  if (!periods.is_number_unsigned() || periods.get<std::size_t>() == 0) {
    invalid(source, "periods must be a positive integer");
  }
  ProfileSet out{grid, periods.get<std::size_t>(), {}, {}};
  for (const auto& edge : field(doc, "graph", source)) {
    if (!edge.is_array() || edge.size() != 2 || !edge[0].is_string() || !edge[1].is_string()) {
      invalid(source, "graph entries must be [broadcaster, follower] pairs");
    }
    try {
      out.network.add_follow(edge[0].get<std::string>(), edge[1].get<std::string>());
    } catch (const DomainError& e) {
      invalid(source, e.what());
    }
  }
  const auto& users = field(doc, "users", source);
  if (!users.is_array()) invalid(source, "users must be an array");
  for (const auto& u : users) {
    const auto& id = field(u, "id", source);
    if (!id.is_string() || id.get<std::string>().empty()) invalid(source, "user id must be a nonempty string");
    const std::string name = id.get<std::string>();
    const std::string where = "user " + name;
    const auto& events = field(u, "events", source);
    if (!events.is_number_unsigned()) invalid(source, where + ": events must be a nonnegative integer");
    FittedProfile p{name,
                    PiecewiseConstantFn(grid, rates_from_json(field(u, "lambda", source), grid.pieces(), source, where + " lambda")),
                    PiecewiseConstantFn(grid, rates_from_json(field(u, "mu", source), grid.pieces(), source, where + " mu")),
                    PiecewiseConstantFn(grid, rates_from_json(field(u, "s", source), grid.pieces(), source, where + " s", 1.0)),
                    out.periods, events.get<std::size_t>()};
    if (!out.profiles.emplace(name, std::move(p)).second) invalid(source, "duplicate user " + name);
  }
  return out;
}

Json solution_to_json(const BroadcastProblem& problem, const UserId& broadcaster,
                      const std::string& allocation, const Solution& solution) {
  Json doc;
  doc["broadcaster"] = broadcaster;
  doc["allocation"] = allocation;
  doc["grid"] = grid_to_json(problem.grid);
  Json p;
  p["objective"] = std::string(to_string(problem.objective));
  p["n"] = problem.mvm_n;
  p["k"] = problem.k;
  p["budget"] = problem.budget;
  p["followers"] = problem.followers.size();
  doc["problem"] = std::move(p);
  doc["c"] = solution.rates;
  doc["objective"] = solution.objective;
  Json per = Json::array();
  for (std::size_t i = 0; i < problem.followers.size(); ++i) {
    per.push_back({{"id", problem.followers[i].id}, {"visibility", solution.per_follower[i]}});
  }
  doc["per_follower"] = std::move(per);
  doc["trace"] = solution.trace;
  doc["converged"] = solution.converged;
  doc["iterations"] = solution.iterations;
  return doc;
}

StoredSolution solution_from_json(const Json& doc, const std::string& source) {
  expect_format(doc, "vshape.solution", source);
  StoredSolution out{grid_from_json(field(doc, "grid", source), source), {}, 1, 0.0, ObjectiveKind::avm, 1, {}};
  const auto& broadcaster = field(doc, "broadcaster", source);
  if (!broadcaster.is_string()) invalid(source, "broadcaster must be a string");
  out.broadcaster = broadcaster.get<std::string>();
  const auto& problem = field(doc, "problem", source);
  const auto& k = field(problem, "k", source);
  const auto& n = field(problem, "n", source);
  const auto& budget = field(problem, "budget", source);
  const auto& objective = field(problem, "objective", source);
  if (!k.is_number_unsigned() || k.get<std::size_t>() == 0) invalid(source, "k must be a positive integer");
  if (!n.is_number_unsigned()) invalid(source, "n must be a nonnegative integer");
  if (!budget.is_number() || !(budget.get<double>() > 0.0)) invalid(source, "budget must be positive");
  if (!objective.is_string()) invalid(source, "objective must be a string");
  out.k = k.get<std::size_t>();
  out.mvm_n = n.get<std::size_t>();
  out.budget = budget.get<double>();
  out.objective = parse_objective_kind(objective.get<std::string>());
  out.rates = rates_from_json(field(doc, "c", source), out.grid.pieces(), source, "c");
  return out;
}

}  // namespace vshape::cli
