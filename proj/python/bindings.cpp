#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vshape/cli.hpp"
#include "vshape/errors.hpp"
#include "vshape/optimizer.hpp"
#include "vshape/simulator.hpp"
#include "vshape/visibility.hpp"

namespace py = pybind11;
using namespace vshape;

namespace {

std::vector<double> unit_or(const std::optional<std::vector<double>>& s, std::size_t n) {
  return s ? *s : std::vector<double>(n, 1.0);
}

BroadcastProblem make_problem(double horizon, const std::vector<std::vector<double>>& feeds,
                              const std::optional<std::vector<std::vector<double>>>& significance,
                              std::size_t k, double budget, const std::string& objective, std::size_t n,
                              const std::optional<std::vector<std::string>>& ids) {
  if (feeds.empty()) throw DomainError("at least one follower feed is required");
  if (significance && significance->size() != feeds.size()) {
    throw DomainError("significance needs one row per follower");
  }
  if (ids && ids->size() != feeds.size()) throw DomainError("ids needs one entry per follower");
  const TimeGrid grid(horizon, feeds.front().size());
  BroadcastProblem p{grid, {}, k, budget, parse_objective_kind(objective), n};
  for (std::size_t i = 0; i < feeds.size(); ++i) {
    std::string id = ids ? (*ids)[i] : "f" + std::to_string(i);
    auto s = significance ? (*significance)[i] : std::vector<double>(feeds[i].size(), 1.0);
    p.followers.push_back({std::move(id), PiecewiseConstantFn(grid, feeds[i]), PiecewiseConstantFn(grid, std::move(s))});
  }
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_vshape, m) {
  m.doc() = "Visibility shaping: closed-form top-k visibility, gradients and optimizers";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "visibility",
      [](const std::vector<double>& broadcast, const std::vector<double>& feed, std::size_t k,
         const std::optional<std::vector<double>>& significance, double horizon) {
        const TimeGrid grid(horizon, broadcast.size());
        return weighted_visibility(PiecewiseConstantFn(grid, broadcast), PiecewiseConstantFn(grid, feed),
                                   PiecewiseConstantFn(grid, unit_or(significance, broadcast.size())), k)
            .value;
      },
      py::arg("broadcast"), py::arg("feed"), py::arg("k") = 1, py::arg("significance") = py::none(),
      py::arg("horizon"));

  m.def(
      "top_k_boundaries",
      [](const std::vector<double>& broadcast, const std::vector<double>& feed, std::size_t k, double horizon) {
        const TimeGrid grid(horizon, broadcast.size());
        std::vector<std::vector<double>> out;
        for (const auto& piece : fk_trajectory(PiecewiseConstantFn(grid, broadcast), PiecewiseConstantFn(grid, feed), k)) {
          out.push_back(piece.exit);
        }
        return out;
      },
      py::arg("broadcast"), py::arg("feed"), py::arg("k"), py::arg("horizon"),
      "f_1..f_k at the end of every piece");

  m.def(
      "gradient",
      [](const std::vector<double>& broadcast, const std::vector<double>& feed, std::size_t k,
         const std::optional<std::vector<double>>& significance, double horizon) {
        const double width = horizon / static_cast<double>(broadcast.size());
        const auto s = unit_or(significance, broadcast.size());
        return k == 1 ? gradient_v1(broadcast, feed, width, s) : gradient_vk(broadcast, feed, k, width, s);
      },
      py::arg("broadcast"), py::arg("feed"), py::arg("k") = 1, py::arg("significance") = py::none(),
      py::arg("horizon"));

  m.def(
      "project_budget",
      [](const std::vector<double>& rates, double budget, double width) {
        return project_budget(rates, budget, width);
      },
      py::arg("rates"), py::arg("budget"), py::arg("width") = 1.0);

  m.def(
      "monte_carlo_visibility",
      [](const std::vector<double>& broadcast, const std::vector<double>& feed, std::size_t k,
         const std::optional<std::vector<double>>& significance, double horizon, std::size_t runs,
         std::uint64_t seed, std::size_t threads) {
        const TimeGrid grid(horizon, broadcast.size());
        const PiecewiseConstantFn s(grid, unit_or(significance, broadcast.size()));
        SimulationOptions opts;
        opts.runs = runs;
        opts.seed = seed;
        opts.threads = threads;
        MeanEstimate est;
        {
          py::gil_scoped_release release;
          est = monte_carlo_visibility(PiecewiseConstantFn(grid, broadcast), PiecewiseConstantFn(grid, feed), k, &s,
                                       opts);
        }
        return py::make_tuple(est.mean, est.std_error);
      },
      py::arg("broadcast"), py::arg("feed"), py::arg("k") = 1, py::arg("significance") = py::none(),
      py::arg("horizon"), py::arg("runs") = 100, py::arg("seed") = 0, py::arg("threads") = 1,
      "(mean, standard error)");

  py::class_<Solution>(m, "Solution")
      .def_readonly("rates", &Solution::rates)
      .def_readonly("objective", &Solution::objective)
      .def_readonly("per_follower", &Solution::per_follower)
      .def_readonly("trace", &Solution::trace)
      .def_readonly("converged", &Solution::converged)
      .def_readonly("iterations", &Solution::iterations)
      .def("__repr__", [](const Solution& s) {
        std::ostringstream os;
        os << "Solution(objective=" << s.objective << ", iterations=" << s.iterations << ")";
        return os.str();
      });

  m.def(
      "solve",
      [](double horizon, const std::vector<std::vector<double>>& feeds,
         const std::optional<std::vector<std::vector<double>>>& significance, std::size_t k, double budget,
         const std::string& objective, std::size_t n, const std::optional<std::vector<std::string>>& ids,
         double tolerance, std::size_t max_iterations, std::size_t threads) {
        const auto problem = make_problem(horizon, feeds, significance, k, budget, objective, n, ids);
        SolverOptions opts;
        opts.tolerance = tolerance;
        opts.max_iterations = max_iterations;
        opts.threads = threads;
        py::gil_scoped_release release;
        return solve(problem, opts);
      },
      py::arg("horizon"), py::arg("feeds"), py::arg("significance") = py::none(), py::arg("k") = 1,
      py::arg("budget"), py::arg("objective") = "avm", py::arg("n") = 1, py::arg("ids") = py::none(),
      py::arg("tolerance") = 1e-8, py::arg("max_iterations") = 10000, py::arg("threads") = 1);

  m.def(
      "baseline",
      [](const std::string& kind, double horizon, const std::vector<std::vector<double>>& feeds,
         const std::optional<std::vector<std::vector<double>>>& significance, std::size_t k, double budget,
         std::size_t n, std::uint64_t seed) {
        const auto problem = make_problem(horizon, feeds, significance, k, budget, "avm", n, std::nullopt);
        return evaluate_allocation(problem, baseline_allocate(parse_baseline_kind(kind), problem, seed));
      },
      py::arg("kind"), py::arg("horizon"), py::arg("feeds"), py::arg("significance") = py::none(), py::arg("k") = 1,
      py::arg("budget"), py::arg("n") = 1, py::arg("seed") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a vshape command in-process; returns (exit_code, stdout, stderr)");
}
