#include "metatune/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "metatune/error.hpp"
#include "metatune/hypertune.hpp"
#include "metatune/report.hpp"
#include "metatune/scoring.hpp"
#include "metatune/simrun.hpp"
#include "metatune/space.hpp"

namespace metatune {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t jobs = 0;
    std::string out;
    double cutoff = 0.95;
    std::size_t grid_count = 50;
    std::size_t repeats = 25;
};

nlohmann::json read_json_file(const fs::path& path) {
    const std::string text = read_file_maybe_gzip(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
    } else {
        write_text_file(out_path, text);
    }
}

std::vector<std::size_t> parse_dims(const std::string& text) {
    std::vector<std::size_t> dims;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find('x', start), text.size());
        std::size_t v = 0;
        const auto* first = text.data() + start;
        const auto* last = text.data() + end;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last || v == 0) {
            throw SpecError("--params expects positive cardinalities like 3x4x4, got '" + text + "'");
        }
        dims.push_back(v);
        start = end + 1;
    }
    return dims;
}

HyperValue parse_hyper_text(const std::string& text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec == std::errc{} && ptr == last && !text.empty()) return v;
    return text;
}

OptimizerSpec spec_from_flags(const std::string& algorithm, const std::vector<std::string>& hps,
                              const std::string& spec_file) {
    OptimizerSpec spec;
    if (!spec_file.empty()) {
        spec = OptimizerSpec::from_json(read_json_file(spec_file));
    } else {
        spec.algorithm = parse_algorithm(algorithm);
    }
    for (const auto& kv : hps) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw SpecError("--hp expects name=value, got '" + kv + "'");
        spec.hyperparameters.set(kv.substr(0, eq), parse_hyper_text(kv.substr(eq + 1)));
    }
    validate_spec(spec);
    return spec;
}

nlohmann::ordered_json stats_json(const SearchSpace& space) {
    const auto st = space_stats(space);
    nlohmann::ordered_json j;
    j["space_id"] = space.meta().id();
    j["dimensions"] = space.dimensions();
    j["configurations"] = st.total_count;
    j["valid"] = st.valid_count;
    j["invalid"] = st.total_count - st.valid_count;
    j["lower_is_better"] = space.meta().lower_is_better;
    j["optimum"] = st.optimum;
    j["median_valid"] = st.median_valid;
    j["mean_eval_cost_s"] = st.mean_eval_cost_s;
    return j;
}

SearchSpace load_space(const std::string& name) { return load_cache(resolve_cache_path(name)); }

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Replay brute-forced auto-tuning search spaces, score and hypertune optimizers",
                 "metatune"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads (0: one per logical core)")->capture_default_str();
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--cutoff", g.cutoff, "Budget cutoff fraction between median and optimum")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--grid-count", g.grid_count, "Number of equidistant sampling points")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--repeats", g.repeats, "Runs per space and configuration")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    // validate
    std::string cache;
    auto* validate = app.add_subcommand("validate", "Check a cache file and list every violation");
    validate->add_option("cache", cache, "Cache file")->required();

    // import
    std::string source, mapping_file;
    auto* import_cmd = app.add_subcommand("import", "Convert a foreign result file into a native cache");
    import_cmd->add_option("source", source, "Foreign result file")->required();
    import_cmd->add_option("--mapping", mapping_file, "Field mapping JSON")->required();

    // synth
    std::string params_text, family = "quadratic", cost_kind = "constant";
    double invalid_fraction = 0.0;
    CostModel cost;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic search space");
    synth->add_option("--params", params_text, "Cardinalities, e.g. 3x4x4")->required();
    synth->add_option("--family", family, "quadratic, sines or rank")->capture_default_str();
    synth->add_option("--invalid-fraction", invalid_fraction, "Fraction of invalid configurations")
        ->capture_default_str();
    synth->add_option("--cost", cost_kind, "constant or lognormal")->capture_default_str();
    synth->add_option("--compile-s", cost.compile_s, "Compile seconds per configuration")->capture_default_str();
    synth->add_option("--runtime-s", cost.runtime_s, "Seconds per benchmark repeat")->capture_default_str();
    synth->add_option("--bench-repeats", cost.repeats, "Benchmark repeats per configuration")->capture_default_str();
    synth->add_option("--framework-s", cost.framework_s, "Framework seconds per configuration")->capture_default_str();
    synth->add_option("--sigma", cost.sigma, "Lognormal cost spread")->capture_default_str();

    // stats
    auto* stats = app.add_subcommand("stats", "Print objective and cost statistics of a cache");
    stats->add_option("cache", cache, "Cache file")->required();

    // baseline
    std::string mode = "analytic";
    std::size_t mc_runs = 10000, max_points = 0;
    auto* baseline = app.add_subcommand("baseline", "Compute the random-search baseline and budget");
    baseline->add_option("cache", cache, "Cache file")->required();
    baseline->add_option("--mode", mode, "analytic or montecarlo")->capture_default_str();
    baseline->add_option("--runs", mc_runs, "Monte Carlo runs")->capture_default_str();
    baseline->add_option("--max-points", max_points, "Curve points (0: one per configuration)")
        ->capture_default_str();

    // tune
    std::string algorithm = "random_search", spec_file;
    std::vector<std::string> hps;
    double budget = 0.0, overhead = 0.0;
    auto* tune = app.add_subcommand("tune", "Replay one optimizer run and write its trace");
    tune->add_option("cache", cache, "Cache file")->required();
    tune->add_option("--algorithm", algorithm, "Optimization algorithm")->capture_default_str();
    tune->add_option("--hp", hps, "Hyperparameter name=value (repeatable)");
    tune->add_option("--spec", spec_file, "Optimizer spec JSON");
    tune->add_option("--budget", budget, "Simulated seconds (default: cutoff budget)");
    tune->add_option("--overhead", overhead, "Optimizer seconds per proposal")->capture_default_str();

    // score
    std::vector<std::string> caches;
    std::string curves_dir;
    auto* score = app.add_subcommand("score", "Score an optimizer configuration on one or more spaces");
    score->add_option("caches", caches, "Cache files")->required();
    score->add_option("--algorithm", algorithm, "Optimization algorithm")->capture_default_str();
    score->add_option("--hp", hps, "Hyperparameter name=value (repeatable)");
    score->add_option("--spec", spec_file, "Optimizer spec JSON");
    score->add_option("--curves", curves_dir, "Directory for per-space curve CSVs");

    // hypertune
    std::string config_file;
    auto* hypertune = app.add_subcommand("hypertune", "Tune hyperparameters from an experiment file");
    hypertune->add_option("--config", config_file, "Experiment definition JSON")->required();

    // report
    std::string results_file, kind, format = "csv";
    auto* report = app.add_subcommand("report", "Emit report files from a results file");
    report->add_option("results", results_file, "Results JSON from hypertune")->required();
    report->add_option("--kind", kind, "aggregate_curve, heatmap or ranking")->required();
    report->add_option("--format", format, "csv or json")->capture_default_str();

    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

    std::vector<char*> argv;
    std::vector<std::string> storage = args.empty() ? std::vector<std::string>{"metatune"} : args;
    for (auto& a : storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (validate->parsed()) {
            nlohmann::ordered_json doc;
            const std::string text = read_file_maybe_gzip(resolve_cache_path(cache));
            try {
                doc = nlohmann::ordered_json::parse(text);
            } catch (const nlohmann::json::parse_error& e) {
                throw SchemaError(cache + ": " + e.what());
            }
            const auto rep = validate_cache(doc);
            if (!rep.ok()) {
                err << cache << ": " << rep.violations.size() << " violation(s)\n";
                for (const auto& v : rep.violations) err << "  " << v << '\n';
                return 1;
            }
            const auto space = parse_cache(doc);
            out << cache << ": ok (" << space.size() << " configurations, "
                << space_stats(space).valid_count << " valid)\n";
        } else if (import_cmd->parsed()) {
            if (g.out.empty()) throw ArgumentError("import needs --out");
            const auto mapping = parse_import_mapping(read_json_file(mapping_file));
            const auto space = import_generic(fs::path(source), mapping);
            save_cache(space, g.out);
            out << "imported " << space.size() << " configurations of " << space.meta().id()
                << " into " << g.out << '\n';
        } else if (synth->parsed()) {
            if (g.out.empty()) throw ArgumentError("synth needs --out");
            SynthSpec spec;
            spec.cardinalities = parse_dims(params_text);
            spec.family = parse_family(family);
            spec.invalid_fraction = invalid_fraction;
            if (cost_kind == "constant") {
                cost.kind = CostModel::Kind::constant;
            } else if (cost_kind == "lognormal") {
                cost.kind = CostModel::Kind::lognormal;
            } else {
                throw SpecError("--cost must be constant or lognormal");
            }
            spec.cost = cost;
            const auto space = synth_space(spec, g.seed);
            save_cache(space, g.out);
            out << "wrote " << space.meta().id() << " (" << space.size() << " configurations) to "
                << g.out << '\n';
        } else if (stats->parsed()) {
            emit(stats_json(load_space(cache)).dump(2) + "\n", g.out, out);
        } else if (baseline->parsed()) {
            const auto space = load_space(cache);
            BaselineMode bm;
            if (mode == "analytic") {
                bm = BaselineMode::analytic;
            } else if (mode == "montecarlo") {
                bm = BaselineMode::montecarlo;
            } else {
                throw ArgumentError("--mode must be analytic or montecarlo");
            }
            BaselineParams bp;
            bp.montecarlo_runs = mc_runs;
            bp.seed = g.seed;
            bp.max_points = max_points;
            bp.jobs = g.jobs;
            const auto curve = baseline_curve(space, bm, bp);
            std::ostringstream csv;
            write_baseline_csv(curve, csv);
            if (g.out.empty()) {
                out << csv.str();
            } else {
                write_text_file(g.out, csv.str());
                const auto b = compute_budget(space, curve, g.cutoff);
                nlohmann::ordered_json j;
                j["space_id"] = curve.space_id;
                j["mode"] = mode;
                j["cutoff_fraction"] = b.cutoff_fraction;
                j["threshold_objective"] = b.threshold_objective;
                j["budget_s"] = b.budget_s;
                out << j.dump(2) << '\n';
            }
        } else if (tune->parsed()) {
            const auto space = load_space(cache);
            const auto spec = spec_from_flags(algorithm, hps, spec_file);
            if (budget <= 0.0) {
                budget = compute_budget(space, baseline_curve(space, BaselineMode::analytic), g.cutoff).budget_s;
            }
            RunOptions opts;
            opts.proposal_overhead_s = overhead;
            const auto trace = simulate_run(space, spec, budget, g.seed, opts);
            CachedSpaceSource src(space);
            emit(trace_to_jsonl(trace, src), g.out, out);
        } else if (score->parsed()) {
            const auto spec = spec_from_flags(algorithm, hps, spec_file);
            ScoringContext ctx;
            ctx.repeats = g.repeats;
            ctx.master_seed = g.seed;
            ctx.jobs = g.jobs;
            for (const auto& c : caches) {
                auto sp = std::make_shared<const SearchSpace>(load_space(c));
                ctx.spaces.push_back(prepare_space(sp, g.cutoff, g.grid_count));
            }
            const auto result = score_hyperconfig(spec, ctx);
            if (!curves_dir.empty()) {
                for (const auto& p : ctx.spaces) {
                    const auto curve = performance_curve(run_repeats(spec, p, ctx), p.baseline, p.grid);
                    std::ostringstream csv;
                    write_curve_csv(curve, csv);
                    write_text_file(fs::path(curves_dir) / ("curve_" + p.id + ".csv"), csv.str());
                }
            }
            nlohmann::ordered_json j;
            j["metadata"] = {{"tool", "metatune"},
                             {"version", kVersion},
                             {"optimizer", spec.to_json()},
                             {"seed", g.seed},
                             {"repeats", g.repeats},
                             {"cutoff_fraction", g.cutoff},
                             {"grid_count", g.grid_count}};
            nlohmann::ordered_json per = nlohmann::ordered_json::object();
            for (const auto& s : result.per_space) per[s.space_id] = s.score;
            j["spaces"] = std::move(per);
            j["aggregate"] = result.score;
            j["aggregate_curve"] = result.aggregate_curve;
            emit(j.dump(2) + "\n", g.out, out);
        } else if (hypertune->parsed()) {
            auto cfg = load_experiment(config_file);
            if (app.count("--repeats")) cfg.repeats = g.repeats;
            if (app.count("--seed")) cfg.master_seed = g.seed;
            if (app.count("--cutoff")) cfg.cutoff_fraction = g.cutoff;
            if (app.count("--grid-count")) cfg.grid_count = g.grid_count;
            const auto doc = run_experiment(cfg, g.jobs);
            emit(doc.dump(2) + "\n", g.out, out);
        } else if (report->parsed()) {
            nlohmann::ordered_json doc;
            try {
                doc = nlohmann::ordered_json::parse(read_file_maybe_gzip(results_file));
            } catch (const nlohmann::json::parse_error& e) {
                throw SchemaError(fs::path(results_file).string() + ": " + e.what());
            }
            const auto files = emit_report(doc, parse_report_kind(kind), parse_report_format(format),
                                           g.out.empty() ? fs::path(".") : fs::path(g.out));
            for (const auto& f : files) out << f.string() << '\n';
        }
    } catch (const ValidationError& e) {
        err << "validation failed:\n";
        for (const auto& v : e.violations()) err << "  " << v << '\n';
        return 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace metatune
