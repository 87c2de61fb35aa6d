#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "metatune/cli.hpp"
#include "metatune/error.hpp"
#include "metatune/hypertune.hpp"
#include "metatune/optimizer_spec.hpp"
#include "metatune/report.hpp"
#include "metatune/scoring.hpp"
#include "metatune/simrun.hpp"
#include "metatune/space.hpp"

namespace py = pybind11;
using namespace metatune;

namespace {

OptimizerSpec spec_from_dict(const std::string& algorithm, const py::dict& hyperparameters) {
    OptimizerSpec spec;
    spec.algorithm = parse_algorithm(algorithm);
    for (const auto& [k, v] : hyperparameters) {
        const auto name = py::cast<std::string>(k);
        if (py::isinstance<py::str>(v)) {
            spec.hyperparameters.set(name, py::cast<std::string>(v));
        } else {
            spec.hyperparameters.set(name, py::cast<double>(v));
        }
    }
    validate_spec(spec);
    return spec;
}

py::dict stats_dict(const SpaceStats& st) {
    py::dict d;
    d["optimum"] = st.optimum;
    d["median_valid"] = st.median_valid;
    d["valid_count"] = st.valid_count;
    d["total_count"] = st.total_count;
    d["mean_eval_cost_s"] = st.mean_eval_cost_s;
    return d;
}

}  // namespace

PYBIND11_MODULE(_metatune, m) {
    m.doc() = "Replay of brute-forced auto-tuning search spaces";
    m.attr("__version__") = kVersion;

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<SpecError>(m, "SpecError", base.ptr());
    py::register_exception<ScoringError>(m, "ScoringError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<SearchSpace, std::shared_ptr<SearchSpace>>(m, "SearchSpace")
        .def_property_readonly("id", [](const SearchSpace& s) { return s.meta().id(); })
        .def_property_readonly("size", &SearchSpace::size)
        .def_property_readonly("dimensions", &SearchSpace::dimensions)
        .def_property_readonly("cardinalities",
                               [](const SearchSpace& s) {
                                   auto c = s.cardinalities();
                                   return std::vector<std::size_t>(c.begin(), c.end());
                               })
        .def("key", &SearchSpace::key)
        .def("find", &SearchSpace::find)
        .def("objective", &SearchSpace::oriented_objective,
             "Objective on the lower-is-better scale; None for invalid configurations")
        .def("stats", [](const SearchSpace& s) { return stats_dict(space_stats(s)); })
        .def("serialize", &serialize_cache)
        .def("save", [](const SearchSpace& s, const std::string& path) { save_cache(s, path); })
        .def("__len__", &SearchSpace::size);

    m.def("load_cache", [](const std::string& path) {
        return std::make_shared<SearchSpace>(load_cache(path));
    });
    m.def(
        "synth_space",
        [](const std::vector<std::size_t>& cardinalities, const std::string& family,
           std::uint64_t seed, double invalid_fraction) {
            SynthSpec spec;
            spec.cardinalities = cardinalities;
            spec.family = parse_family(family);
            spec.invalid_fraction = invalid_fraction;
            return std::make_shared<SearchSpace>(synth_space(spec, seed));
        },
        py::arg("cardinalities"), py::arg("family") = "quadratic", py::arg("seed") = 0,
        py::arg("invalid_fraction") = 0.0);

    m.def("expected_min_after_n",
          [](std::vector<double> sorted_valid, std::size_t total, std::size_t n) {
              return expected_min_after_n(sorted_valid, total, n);
          });
    m.def("relative_score", &relative_score, py::arg("baseline"), py::arg("best"), py::arg("optimum"));

    m.def(
        "baseline",
        [](const SearchSpace& space, const std::string& mode, std::size_t runs, std::uint64_t seed) {
            BaselineParams p;
            p.montecarlo_runs = runs;
            p.seed = seed;
            const auto curve = baseline_curve(
                space, mode == "montecarlo" ? BaselineMode::montecarlo : BaselineMode::analytic, p);
            std::vector<std::pair<double, double>> points;
            for (const auto& pt : curve.points) points.emplace_back(pt.time_s, pt.expected_best);
            return points;
        },
        py::arg("space"), py::arg("mode") = "analytic", py::arg("runs") = 10000, py::arg("seed") = 0);

    m.def(
        "budget",
        [](const SearchSpace& space, double cutoff) {
            const auto b = compute_budget(space, baseline_curve(space, BaselineMode::analytic), cutoff);
            py::dict d;
            d["threshold_objective"] = b.threshold_objective;
            d["budget_s"] = b.budget_s;
            d["cutoff_fraction"] = b.cutoff_fraction;
            return d;
        },
        py::arg("space"), py::arg("cutoff") = 0.95);

    m.def(
        "simulate_run",
        [](const SearchSpace& space, const std::string& algorithm, const py::dict& hyperparameters,
           double budget_s, std::uint64_t seed) {
            const auto spec = spec_from_dict(algorithm, hyperparameters);
            const auto trace = simulate_run(space, spec, budget_s, seed);
            CachedSpaceSource src(space);
            return trace_to_jsonl(trace, src);
        },
        py::arg("space"), py::arg("algorithm"), py::arg("hyperparameters") = py::dict(),
        py::arg("budget_s"), py::arg("seed") = 0, "Returns the trace as JSON lines");

    m.def(
        "score",
        [](const std::vector<std::shared_ptr<SearchSpace>>& spaces, const std::string& algorithm,
           const py::dict& hyperparameters, std::size_t repeats, double cutoff,
           std::size_t grid_count, std::uint64_t seed) {
            const auto spec = spec_from_dict(algorithm, hyperparameters);
            ScoringContext ctx;
            ctx.repeats = repeats;
            ctx.master_seed = seed;
            for (const auto& s : spaces) ctx.spaces.push_back(prepare_space(s, cutoff, grid_count));
            HyperResult r;
            {
                py::gil_scoped_release release;
                r = score_hyperconfig(spec, ctx);
            }
            py::dict per;
            for (const auto& s : r.per_space) per[py::str(s.space_id)] = s.score;
            py::dict d;
            d["score"] = r.score;
            d["per_space"] = per;
            d["aggregate_curve"] = r.aggregate_curve;
            return d;
        },
        py::arg("spaces"), py::arg("algorithm"), py::arg("hyperparameters") = py::dict(),
        py::arg("repeats") = 25, py::arg("cutoff") = 0.95, py::arg("grid_count") = 50,
        py::arg("seed") = 0);

    m.def("grid_size", [](const std::string& algorithm, const std::string& preset) {
        const auto alg = parse_algorithm(algorithm);
        return build_hyperspace(alg, parse_grid(alg, nlohmann::json(preset))).size();
    }, py::arg("algorithm"), py::arg("preset") = "reference");

    m.def(
        "run_command",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> full{"metatune"};
            full.insert(full.end(), args.begin(), args.end());
            std::ostringstream out, err;
            const int code = run_command(full, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        "Runs the command-line tool in process; returns (exit_code, stdout, stderr)");
}
