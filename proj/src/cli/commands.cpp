#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "cli/schema.hpp"
#include "vshape/cli.hpp"
#include "vshape/errors.hpp"
#include "vshape/io.hpp"
#include "vshape/numeric.hpp"
#include "vshape/simulator.hpp"
#include "vshape/visibility.hpp"

namespace vshape::cli {

namespace {

enum class Kind { text, path, real, count };

struct OptionSpec {
  std::string key;    // config key, also the flag name with '_' -> '-'
  Kind kind;
  Json fallback;      // null: required or resolved later
  std::string help;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
};

using Handler = std::function<void(Json&, Context&)>;

struct Command {
  std::string name;
  std::string description;
  std::vector<OptionSpec> options;
  Handler handler;
};

const std::vector<std::string> kSharedKeys = {"grid_hours", "pieces", "k",       "budget",
                                              "seed",       "runs",   "threads"};

std::string flag_of(const std::string& key) {
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

Json parse_flag_value(const OptionSpec& spec, const std::string& raw) {
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  switch (spec.kind) {
    case Kind::text:
    case Kind::path:
      return raw;
    case Kind::real: {
      double x = 0.0;
      auto res = std::from_chars(first, last, x);
      if (res.ec != std::errc() || res.ptr != last || !std::isfinite(x)) {
        throw ValidationError(flag_of(spec.key) + ": expected a number, got '" + raw + "'");
      }
      return x;
    }
    case Kind::count: {
      std::uint64_t n = 0;
      auto res = std::from_chars(first, last, n);
      if (res.ec != std::errc() || res.ptr != last) {
        throw ValidationError(flag_of(spec.key) + ": expected a nonnegative integer, got '" + raw + "'");
      }
      return n;
    }
  }
  return nullptr;
}

Json check_config_value(const OptionSpec& spec, const Json& value, const std::string& source) {
  const std::string where = source + ": config key '" + spec.key + "'";
  if (value.is_null()) {
    if (!spec.fallback.is_null()) throw ValidationError(where + " cannot be null");
    return value;
  }
  switch (spec.kind) {
    case Kind::text:
    case Kind::path:
      if (!value.is_string()) throw ValidationError(where + " must be a string");
      break;
    case Kind::real:
      if (!value.is_number()) throw ValidationError(where + " must be a number");
      return value.get<double>();
    case Kind::count:
      if (!value.is_number_unsigned()) throw ValidationError(where + " must be a nonnegative integer");
      break;
  }
  return value;
}

const Json& require(const Json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (v.is_null()) throw ValidationError("missing " + flag_of(key) + " (flag or config key '" + key + "')");
  return v;
}

std::string text(const Json& cfg, const std::string& key) { return require(cfg, key).get<std::string>(); }
double real(const Json& cfg, const std::string& key) { return require(cfg, key).get<double>(); }
std::size_t count(const Json& cfg, const std::string& key) { return require(cfg, key).get<std::size_t>(); }

std::size_t positive(const Json& cfg, const std::string& key) {
  const std::size_t n = count(cfg, key);
  if (n == 0) throw ValidationError(flag_of(key) + " must be at least 1");
  return n;
}

void emit(const Json& cfg, const std::string& content, Context& ctx) {
  const std::string path = text(cfg, "out");
  if (path == "-") {
    ctx.out << content;
  } else {
    write_text_file(path, content);
  }
}

// Summary lines go to stdout unless stdout carries the document itself.
std::ostream& summary(const Json& cfg, Context& ctx) { return text(cfg, "out") == "-" ? ctx.err : ctx.out; }

std::string number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void set_window(EventLog& log, Json& cfg, double period_seconds) {
  const auto& start = cfg.at("window_start");
  const auto& end = cfg.at("window_end");
  if (start.is_null() != end.is_null()) {
    throw ValidationError("--window-start and --window-end must be given together");
  }
  if (start.is_null()) {
    log.infer_window(period_seconds);
  } else {
    log.set_window(start.get<double>(), end.get<double>());
  }
  cfg["window_start"] = log.start();
  cfg["window_end"] = log.end();
}

SolverOptions solver_options(const Json& cfg) {
  SolverOptions opts;
  opts.tolerance = real(cfg, "tolerance");
  opts.max_iterations = positive(cfg, "max_iterations");
  opts.threads = positive(cfg, "threads");
  if (!(opts.tolerance >= 0.0)) throw ValidationError("--tolerance must be nonnegative");
  return opts;
}

ProfileSet load_profiles(const Json& cfg) {
  const std::string path = text(cfg, "profiles");
  return profiles_from_json(load_json(path), path);
}

StoredSolution load_solution(const Json& cfg) {
  const std::string path = text(cfg, "solution");
  return solution_from_json(load_json(path), path);
}

ObjectiveKind objective_of(const Json& cfg) { return parse_objective_kind(text(cfg, "objective")); }

// Problem for a stored solution, on the profiles' followers.
BroadcastProblem stored_problem(const StoredSolution& sol, const ProfileSet& profiles, std::size_t k) {
  if (!(profiles.grid == sol.grid)) {
    throw ValidationError("solution and profiles use different grids");
  }
  return build_problem(profiles, sol.broadcaster, k, sol.budget, sol.objective, sol.mvm_n);
}

std::size_t resolve_k(Json& cfg, const StoredSolution& sol) {
  if (cfg.at("k").is_null()) cfg["k"] = sol.k;
  return positive(cfg, "k");
}

// ---- commands ------------------------------------------------------------

void cmd_fit(Json& cfg, Context& ctx) {
  const TimeGrid grid(real(cfg, "grid_hours"), positive(cfg, "pieces"));
  const std::string events_path = text(cfg, "events");
  const std::string graph_path = text(cfg, "graph");
  EventLog log = read_event_log(events_path);
  const Network network = read_follow_graph(graph_path);
  set_window(log, cfg, grid.horizon() * kSecondsPerUnit);
  const ProfileSet profiles = fit_profiles(log, network, grid);

  Json doc = envelope("vshape.profiles", cfg);
  doc.update(profiles_to_json(profiles, log.start(), log.end()));
  emit(cfg, dump(doc), ctx);
  summary(cfg, ctx) << "fit: " << profiles.profiles.size() << " users, " << network.edge_count()
                    << " follow edges, " << profiles.periods << " periods, " << log.record_count()
                    << " events\n";
}

Solution solve_from_config(Json& cfg, BroadcastProblem& problem, const std::string& allocation,
                           std::uint64_t seed) {
  const SolverOptions opts = solver_options(cfg);
  if (allocation == "optimized") return solve(problem, opts);
  const auto kind = parse_baseline_kind(allocation);
  return evaluate_allocation(problem, baseline_allocate(kind, problem, seed, opts), opts.threads);
}

void optimize_like(Json& cfg, Context& ctx, const std::string& allocation) {
  const ProfileSet profiles = load_profiles(cfg);
  const std::string broadcaster = text(cfg, "broadcaster");
  std::optional<double> budget;
  if (!cfg.at("budget").is_null()) budget = real(cfg, "budget");
  auto problem = build_problem(profiles, broadcaster, positive(cfg, "k"), budget, objective_of(cfg),
                               positive(cfg, "mvm_n"));
  cfg["budget"] = problem.budget;
  const std::uint64_t seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : 0;
  const Solution sol = solve_from_config(cfg, problem, allocation, seed);

  Json doc = envelope("vshape.solution", cfg);
  doc.update(solution_to_json(problem, broadcaster, allocation, sol));
  emit(cfg, dump(doc), ctx);
  summary(cfg, ctx) << allocation << ": " << problem.followers.size() << " followers, objective "
                    << number(sol.objective) << "\n";
}

void cmd_optimize(Json& cfg, Context& ctx) { optimize_like(cfg, ctx, "optimized"); }

void cmd_baseline(Json& cfg, Context& ctx) {
  const auto kind = parse_baseline_kind(text(cfg, "kind"));
  optimize_like(cfg, ctx, std::string(to_string(kind)));
}

struct FollowerEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

void cmd_evaluate(Json& cfg, Context& ctx) {
  const std::string scheme = text(cfg, "scheme");
  if (scheme != "theoretical" && scheme != "simulated" && scheme != "heldout") {
    throw ValidationError("--scheme must be one of theoretical, simulated, heldout");
  }
  const bool stochastic = scheme != "theoretical";
  if (!stochastic) {
    for (const char* key : {"runs", "seed", "capacity", "test_events", "window_start", "window_end"}) cfg.erase(key);
  } else if (scheme == "simulated") {
    for (const char* key : {"test_events", "window_start", "window_end"}) cfg.erase(key);
  } else if (cfg.at("test_events").is_null()) {
    throw ValidationError("--scheme heldout requires --test-events");
  }

  const StoredSolution sol = load_solution(cfg);
  const ProfileSet profiles = load_profiles(cfg);
  const std::size_t k = resolve_k(cfg, sol);
  const auto problem = stored_problem(sol, profiles, k);
  const PiecewiseConstantFn lambda(sol.grid, sol.rates);
  const std::size_t threads = positive(cfg, "threads");

  std::vector<FollowerEstimate> est(problem.followers.size());
  if (!stochastic) {
    const auto vis = follower_visibilities(problem, sol.rates, threads);
    for (std::size_t i = 0; i < vis.size(); ++i) est[i].value = vis[i];
  } else {
    SimulationOptions opts;
    opts.runs = count(cfg, "runs");
    opts.seed = require(cfg, "seed").get<std::uint64_t>();
    opts.capacity = positive(cfg, "capacity");
    opts.threads = threads;
    if (opts.runs == 0) throw ValidationError("--runs must be at least 1 for a stochastic scheme");
    if (k > opts.capacity) throw ValidationError("k must not exceed the feed capacity");
    if (scheme == "simulated") {
      for (std::size_t i = 0; i < est.size(); ++i) {
        const auto& f = problem.followers[i];
        opts.stream = i;
        const auto m = monte_carlo_visibility(lambda, f.feed, k, &f.significance, opts);
        est[i] = {m.mean, m.std_error};
      }
    } else {
      const std::string path = text(cfg, "test_events");
      EventLog log = read_event_log(path);
      set_window(log, cfg, sol.grid.horizon() * kSecondsPerUnit);
      const std::size_t periods = whole_periods(log, sol.grid);
      for (std::size_t i = 0; i < est.size(); ++i) {
        const auto& f = problem.followers[i];
        const auto feeds = recorded_feeds(profiles.network, log, sol.broadcaster, f.id, sol.grid);
        CompensatedSum mean, var;
        for (std::size_t p = 0; p < periods; ++p) {
          opts.stream = i * periods + p;
          const auto m = heldout_visibility(lambda, feeds[p], k, &f.significance, opts);
          mean.add(m.mean);
          var.add(m.std_error * m.std_error);
        }
        const double n = static_cast<double>(periods);
        est[i] = {mean.value() / n, std::sqrt(var.value()) / n};
      }
    }
  }

  Json doc = envelope("vshape.report", cfg);
  doc["scheme"] = scheme;
  doc["broadcaster"] = sol.broadcaster;
  doc["k"] = k;
  doc["grid"] = grid_to_json(sol.grid);
  Json rows = Json::array();
  std::vector<double> values;
  CompensatedSum total, total_var;
  for (std::size_t i = 0; i < est.size(); ++i) {
    Json row;
    row["id"] = problem.followers[i].id;
    row["visibility"] = est[i].value;
    if (stochastic) row["std_error"] = est[i].std_error;
    rows.push_back(std::move(row));
    values.push_back(est[i].value);
    total.add(est[i].value);
    total_var.add(est[i].std_error * est[i].std_error);
  }
  doc["followers"] = std::move(rows);
  doc["total"] = total.value();
  if (stochastic) doc["total_std_error"] = std::sqrt(total_var.value());
  doc["mean"] = total.value() / static_cast<double>(est.size());
  doc["objective"] = std::string(to_string(problem.objective));
  doc["objective_value"] = objective_value(problem, values);
  emit(cfg, dump(doc), ctx);
  summary(cfg, ctx) << "evaluate (" << scheme << "): " << est.size() << " followers, total "
                    << number(total.value()) << "\n";
}

void cmd_trajectory(Json& cfg, Context& ctx) {
  const StoredSolution sol = load_solution(cfg);
  const ProfileSet profiles = load_profiles(cfg);
  const std::size_t k = resolve_k(cfg, sol);
  const std::string follower = text(cfg, "follower");
  const auto problem = stored_problem(sol, profiles, k);
  const Follower* f = nullptr;
  for (const auto& candidate : problem.followers) {
    if (candidate.id == follower) f = &candidate;
  }
  if (f == nullptr) throw DomainError(follower + " does not follow " + sol.broadcaster);

  const PiecewiseConstantFn lambda(sol.grid, sol.rates);
  const auto traj = fk_trajectory(lambda, f->feed, k);
  const double horizon = sol.grid.horizon();
  const auto steps = static_cast<std::size_t>(std::llround(horizon * 60.0));  // one-minute samples
  std::string csv = "# vshape trajectory format_version=" + std::to_string(kFormatVersion) + "\n";
  csv += "# config=" + cfg.dump() + "\n";
  csv += "t,f_k,s\n";
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = i == steps ? horizon : horizon * static_cast<double>(i) / static_cast<double>(steps);
    const std::size_t piece = i == steps ? sol.grid.pieces() - 1 : sol.grid.piece_of(t);
    csv += number(t) + "," + number(trajectory_value(traj, sol.grid, t)) + "," +
           number(f->significance[piece]) + "\n";
  }
  emit(cfg, csv, ctx);
  summary(cfg, ctx) << "trajectory: " << steps + 1 << " samples for " << follower << "\n";
}

void cmd_synthesize(Json& cfg, Context& ctx) {
  CorpusParameters params;
  params.horizon = real(cfg, "grid_hours");
  params.pieces = positive(cfg, "pieces");
  params.broadcasters = positive(cfg, "broadcasters");
  params.followers_per_broadcaster = positive(cfg, "followers");
  params.sources = positive(cfg, "sources");
  params.followees_per_follower = count(cfg, "followees");
  params.train_periods = positive(cfg, "train_periods");
  params.test_periods = positive(cfg, "test_periods");
  const auto corpus = synthesize_corpus(params, require(cfg, "seed").get<std::uint64_t>());

  const std::filesystem::path dir = text(cfg, "out_dir");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::string header = "# vshape synthesize format_version=" + std::to_string(kFormatVersion) +
                             "\n# config=" + cfg.dump() + "\n";
  write_text_file((dir / "graph.tsv").string(), header + format_follow_graph(corpus.network));
  write_text_file((dir / "train_events.tsv").string(), header + format_event_log(corpus.train));
  write_text_file((dir / "test_events.tsv").string(), header + format_event_log(corpus.test));

  Json doc = envelope("vshape.corpus", cfg);
  doc["grid"] = grid_to_json(corpus.grid);
  doc["broadcasters"] = corpus.broadcasters;
  doc["train_window"] = {{"start", corpus.train.start()}, {"end", corpus.train.end()}};
  doc["test_window"] = {{"start", corpus.test.start()}, {"end", corpus.test.end()}};
  Json truth = Json::array();
  for (const auto& [id, f] : corpus.truth) {
    truth.push_back({{"id", id}, {"lambda", std::vector<double>(f.values().begin(), f.values().end())}});
  }
  doc["truth"] = std::move(truth);
  write_text_file((dir / "manifest.json").string(), dump(doc));
  ctx.out << "synthesize: " << corpus.broadcasters.size() << " broadcasters, "
          << corpus.network.edge_count() << " follow edges, " << corpus.train.record_count()
          << " train and " << corpus.test.record_count() << " test events in " << dir.string() << "\n";
}

// ---- option tables -------------------------------------------------------

OptionSpec opt(std::string key, Kind kind, Json fallback, std::string help) {
  return {std::move(key), kind, std::move(fallback), std::move(help)};
}

std::vector<Command> commands() {
  const Json none = nullptr;
  auto out = opt("out", Kind::path, "-", "Output file ('-' for stdout)");
  auto profiles = opt("profiles", Kind::path, none, "Profiles JSON written by 'fit'");
  auto solution = opt("solution", Kind::path, none, "Solution JSON written by 'optimize' or 'baseline'");
  auto broadcaster = opt("broadcaster", Kind::text, none, "Broadcaster id");
  auto grid_hours = opt("grid_hours", Kind::real, 24.0, "Period length T in hours");
  auto pieces = opt("pieces", Kind::count, 24, "Number of pieces M");
  auto k = opt("k", Kind::count, 1, "Top-k depth");
  auto k_late = opt("k", Kind::count, none, "Top-k depth (default: the solution's k)");
  auto budget = opt("budget", Kind::real, none, "Expected posts per period (default: observed mean)");
  auto objective = opt("objective", Kind::text, "avm", "avm or mvm");
  auto mvm_n = opt("mvm_n", Kind::count, 1, "Number of least-visible followers for mvm");
  auto seed = opt("seed", Kind::count, 0, "Root random seed");
  auto runs = opt("runs", Kind::count, 100, "Simulation runs");
  auto threads = opt("threads", Kind::count, 1, "Worker threads");
  auto tolerance = opt("tolerance", Kind::real, 1e-8, "Relative objective change for stopping");
  auto max_iterations = opt("max_iterations", Kind::count, 10000, "Iteration cap");
  auto window_start = opt("window_start", Kind::real, none, "Log window start, unix seconds");
  auto window_end = opt("window_end", Kind::real, none, "Log window end, unix seconds");

  return {
      {"fit",
       "Fit periodic intensities and significance for every user",
       {opt("events", Kind::path, none, "Event log (user<TAB>unix seconds)"),
        opt("graph", Kind::path, none, "Follow graph (broadcaster<TAB>follower)"), out, grid_hours,
        pieces, window_start, window_end},
       cmd_fit},
      {"optimize",
       "Solve the visibility shaping problem for one broadcaster",
       {profiles, broadcaster, out, k, budget, objective, mvm_n, threads, tolerance, max_iterations},
       cmd_optimize},
      {"baseline",
       "Allocate the budget with a baseline heuristic",
       {profiles, broadcaster, opt("kind", Kind::text, none, "ravm, iavm, pavm, rmvm, imvm or greedy"), out,
        k, budget, objective, mvm_n, seed, threads, tolerance, max_iterations},
       cmd_baseline},
      {"evaluate",
       "Evaluate a solution: theoretical, simulated or heldout",
       {solution, profiles, opt("scheme", Kind::text, "theoretical", "theoretical, simulated or heldout"),
        out, k_late, runs, seed, threads, opt("capacity", Kind::count, 20, "Feed capacity"),
        opt("test_events", Kind::path, none, "Held-out event log"), window_start, window_end},
       cmd_evaluate},
      {"trajectory",
       "Export f_k(t) for one follower on a one-minute grid as CSV",
       {solution, profiles, opt("follower", Kind::text, none, "Follower id"), k_late, out},
       cmd_trajectory},
      {"synthesize",
       "Generate a synthetic corpus with known intensities",
       {opt("out_dir", Kind::path, none, "Output directory"), seed, grid_hours, pieces,
        opt("broadcasters", Kind::count, 20, "Broadcasters"),
        opt("followers", Kind::count, 30, "Followers per broadcaster"),
        opt("sources", Kind::count, 40, "Other accounts"),
        opt("followees", Kind::count, 3, "Other followees per follower"),
        opt("train_periods", Kind::count, 14, "Training periods"),
        opt("test_periods", Kind::count, 14, "Test periods")},
       cmd_synthesize},
  };
}

const OptionSpec* find_spec(const Command& cmd, const std::string& key) {
  for (const auto& spec : cmd.options) {
    if (spec.key == key) return &spec;
  }
  return nullptr;
}

bool known_anywhere(const std::vector<Command>& all, const std::string& key) {
  for (const auto& cmd : all) {
    if (find_spec(cmd, key)) return true;
  }
  return key == "command";
}

Json resolve(const std::vector<Command>& all, const Command& cmd, const std::map<std::string, std::string>& flags,
             const std::string& config_path) {
  Json cfg;
  cfg["command"] = cmd.name;
  for (const auto& spec : cmd.options) cfg[spec.key] = spec.fallback;

  if (!config_path.empty()) {
    Json file = load_json(config_path);
    if (file.is_object() && file.contains("config") && file.contains("format")) file = file.at("config");
    if (!file.is_object()) throw ValidationError(config_path + ": config must be a JSON object");
    if (file.contains("command") && file.at("command") != cmd.name) {
      throw ValidationError(config_path + ": config is for command '" + file.at("command").dump() + "'");
    }
    for (const auto& [key, value] : file.items()) {
      if (key == "command") continue;
      if (const auto* spec = find_spec(cmd, key)) {
        cfg[key] = check_config_value(*spec, value, config_path);
      } else if (!known_anywhere(all, key)) {
        throw ValidationError(config_path + ": unknown config key '" + key + "'");
      }
    }
  }
  for (const auto& [key, raw] : flags) cfg[key] = parse_flag_value(*find_spec(cmd, key), raw);
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto all = commands();
  CLI::App app{"Visibility shaping for social broadcasters", "vshape"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vshape format_version " + std::to_string(kFormatVersion));

  struct Bound {
    const Command* cmd;
    CLI::App* app;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> opts;
    std::string config;
  };
  std::vector<Bound> bound(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& b = bound[i];
    b.cmd = &all[i];
    b.app = app.add_subcommand(all[i].name, all[i].description);
    std::set<std::string> keys;
    for (const auto& spec : all[i].options) keys.insert(spec.key);
    for (const auto& key : kSharedKeys) keys.insert(key);
    for (const auto& key : keys) {
      const auto* spec = find_spec(all[i], key);
      std::string names = flag_of(key);
      if (key == "mvm_n") names = "-n," + names;
      b.opts[key] = b.app->add_option(names, b.raw[key], spec ? spec->help : "Not used by this command");
    }
    b.app->add_option("--config", b.config, "JSON config, or any output of this command");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  for (auto& b : bound) {
    if (!b.app->parsed()) continue;
    Context ctx{out, err};
    try {
      std::map<std::string, std::string> flags;
      for (const auto& [key, option] : b.opts) {
        if (option->count() == 0) continue;
        if (find_spec(*b.cmd, key)) {
          flags[key] = b.raw[key];
        } else {
          err << "warning: " << flag_of(key) << " has no effect on " << b.cmd->name << "\n";
        }
      }
      Json cfg = resolve(all, *b.cmd, flags, b.config);
      b.cmd->handler(cfg, ctx);
      return kExitOk;
    } catch (const IoError& e) {
      err << "error: " << e.what() << "\n";
      return kExitIo;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitValidation;
    }
  }
  return kExitValidation;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace vshape::cli
