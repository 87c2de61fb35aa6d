#include "metatune/hypertune.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "metatune/error.hpp"
#include "metatune/optim.hpp"
#include "metatune/parallel.hpp"
#include "metatune/rng.hpp"

namespace metatune {

namespace {

std::vector<HyperValue> numbers(std::initializer_list<double> values) {
    return {values.begin(), values.end()};
}

std::vector<HyperValue> texts(std::initializer_list<const char*> values) {
    std::vector<HyperValue> out;
    for (const char* v : values) out.emplace_back(std::string(v));
    return out;
}

/// first, first + step, ... up to last inclusive, rounded to suppress drift.
std::vector<HyperValue> arithmetic(double first, double last, double step) {
    std::vector<HyperValue> out;
    const auto count = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
        const double v = first + static_cast<double>(k) * step;
        out.emplace_back(std::round(v * 1e10) / 1e10);
    }
    return out;
}

}  // namespace

GridDefinition reference_grid(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::random_search: return {};
        case Algorithm::dual_annealing:
            return {{"method", texts({"COBYLA", "L-BFGS-B", "SLSQP", "CG", "Powell", "Nelder-Mead",
                                      "BFGS", "trust-constr"})}};
        case Algorithm::genetic_algorithm:
            return {{"method", texts({"single_point", "two_point", "uniform", "disruptive_uniform"})},
                    {"popsize", numbers({10, 20, 30})},
                    {"maxiter", numbers({50, 100, 150})},
                    {"mutation_chance", numbers({5, 10, 20})}};
        case Algorithm::pso:
            return {{"popsize", numbers({10, 20, 30})},
                    {"maxiter", numbers({50, 100, 150})},
                    {"c1", numbers({1.0, 2.0, 3.0})},
                    {"c2", numbers({0.5, 1.0, 1.5})}};
        case Algorithm::simulated_annealing:
            return {{"T", numbers({0.5, 1.0, 1.5})},
                    {"T_min", numbers({0.0001, 0.001, 0.01})},
                    {"alpha", numbers({0.9925, 0.995, 0.9975})},
                    {"maxiter", numbers({1, 2, 3})}};
    }
    return {};
}

GridDefinition extended_grid(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::genetic_algorithm:
            return {{"method", texts({"single_point", "two_point", "uniform", "disruptive_uniform"})},
                    {"popsize", arithmetic(2, 50, 2)},
                    {"maxiter", arithmetic(10, 200, 10)},
                    {"mutation_chance", arithmetic(5, 100, 5)}};
        case Algorithm::pso:
            return {{"popsize", arithmetic(2, 50, 2)},
                    {"maxiter", arithmetic(10, 200, 10)},
                    {"c1", arithmetic(1.0, 3.5, 0.25)},
                    {"c2", arithmetic(0.5, 2.0, 0.25)}};
        case Algorithm::simulated_annealing: {
            auto t_min = arithmetic(0.0001, 0.1, 0.001);
            t_min.emplace_back(0.1);
            return {{"T", arithmetic(0.1, 2.0, 0.1)},
                    {"T_min", std::move(t_min)},
                    {"alpha", numbers({0.9925, 0.995, 0.9975})},
                    {"maxiter", arithmetic(1, 10, 1)}};
        }
        case Algorithm::random_search:
        case Algorithm::dual_annealing: return reference_grid(algorithm);
    }
    return {};
}

GridDefinition parse_grid(Algorithm algorithm, const nlohmann::json& doc) {
    if (doc.is_string()) {
        const auto name = doc.get<std::string>();
        if (name == "reference") return reference_grid(algorithm);
        if (name == "extended") return extended_grid(algorithm);
        throw SpecError("unknown grid preset '" + name + "' (expected reference or extended)");
    }
    auto values_of = [](const std::string& name, const nlohmann::json& list) {
        if (!list.is_array() || list.empty()) {
            throw SpecError("grid dimension '" + name + "' needs a nonempty array of values");
        }
        std::vector<HyperValue> values;
        for (const auto& v : list) values.push_back(hyper_value_from_json(v));
        return values;
    };
    GridDefinition grid;
    if (doc.is_array()) {
        for (const auto& dim : doc) {
            if (!dim.is_object() || !dim.contains("name") || !dim.at("name").is_string() ||
                !dim.contains("values")) {
                throw SpecError("grid entries must be objects with 'name' and 'values'");
            }
            const auto name = dim.at("name").get<std::string>();
            grid.emplace_back(name, values_of(name, dim.at("values")));
        }
        return grid;
    }
    if (doc.is_object()) {
        const auto known = known_hyperparameters(algorithm);
        for (const auto& [name, list] : doc.items()) {
            if (std::find(known.begin(), known.end(), name) == known.end()) {
                throw SpecError("unknown hyperparameter '" + name + "' for " +
                                std::string(algorithm_name(algorithm)));
            }
        }
        for (const auto& name : known) {
            if (const auto it = doc.find(name); it != doc.end()) grid.emplace_back(name, values_of(name, *it));
        }
        return grid;
    }
    throw SpecError("grid must be a preset name, an array or an object");
}

HyperSpace::HyperSpace(Algorithm algorithm, GridDefinition dimensions)
    : algorithm_(algorithm), dimensions_(std::move(dimensions)) {
    std::set<std::string> names;
    for (const auto& [name, values] : dimensions_) {
        if (!names.insert(name).second) throw SpecError("duplicate grid dimension '" + name + "'");
        if (values.empty()) throw SpecError("grid dimension '" + name + "' is empty");
        for (const auto& v : values) {
            OptimizerSpec probe{algorithm_, {}};
            probe.hyperparameters.set(name, v);
            validate_spec(probe);
        }
        cardinalities_.push_back(values.size());
        size_ *= values.size();
    }
}

HyperConfig HyperSpace::at(std::size_t index) const {
    if (index >= size_) throw ArgumentError("grid index out of range");
    HyperConfig h;
    std::size_t stride = size_;
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        stride /= cardinalities_[i];
        h.set(dimensions_[i].first, dimensions_[i].second[(index / stride) % cardinalities_[i]]);
    }
    return h;
}

OptimizerSpec HyperSpace::spec_at(std::size_t index) const {
    return OptimizerSpec{algorithm_, at(index)};
}

HyperSpace build_hyperspace(Algorithm algorithm, const GridDefinition& grid) {
    return HyperSpace(algorithm, grid);
}

PreparedSpace prepare_space(std::shared_ptr<const SearchSpace> space, double cutoff_fraction,
                            std::size_t grid_count, std::string id) {
    if (!space) throw ArgumentError("prepare_space needs a space");
    PreparedSpace p;
    p.id = id.empty() ? space->meta().id() : std::move(id);
    p.baseline = baseline_curve(*space, BaselineMode::analytic);
    p.stats = p.baseline.stats;
    try {
        p.budget = compute_budget(*space, p.baseline, cutoff_fraction);
    } catch (const UnreachableBudget& e) {
        throw ScoringError("no budget for space " + p.id + ": " + e.what());
    }
    p.grid = make_sampling_grid(p.budget.budget_s, grid_count);
    p.space = std::move(space);
    return p;
}

std::vector<RunTrace> run_repeats(const OptimizerSpec& spec, const PreparedSpace& prepared,
                                  const ScoringContext& context) {
    if (context.repeats == 0) throw ArgumentError("repeats must be at least 1");
    if (!prepared.space || !(prepared.budget.budget_s > 0.0)) {
        throw ScoringError("no budget for space " + prepared.id);
    }
    const auto h_id = spec.canonical();
    std::vector<RunTrace> traces(context.repeats);
    parallel_for(context.repeats, context.jobs, [&](std::size_t r) {
        const auto seed = derive_seed(context.master_seed, prepared.id, h_id, r);
        traces[r] = simulate_run(*prepared.space, spec, prepared.budget.budget_s, seed,
                                 context.run_options);
    });
    return traces;
}

HyperResult score_hyperconfig(const OptimizerSpec& spec, const ScoringContext& context) {
    validate_spec(spec);
    if (context.spaces.empty()) throw ArgumentError("scoring needs at least one space");
    if (context.repeats == 0) throw ArgumentError("repeats must be at least 1");
    for (const auto& p : context.spaces) {
        if (!p.space || !(p.budget.budget_s > 0.0)) throw ScoringError("no budget for space " + p.id);
    }
    const auto h_id = spec.canonical();
    const std::size_t n_spaces = context.spaces.size();
    const std::size_t repeats = context.repeats;

    // One flat task list over (space, repeat); results land by index.
    std::vector<std::vector<RunTrace>> traces(n_spaces, std::vector<RunTrace>(repeats));
    parallel_for(n_spaces * repeats, context.jobs, [&](std::size_t task) {
        const auto& p = context.spaces[task / repeats];
        const std::size_t r = task % repeats;
        const auto seed = derive_seed(context.master_seed, p.id, h_id, r);
        traces[task / repeats][r] =
            simulate_run(*p.space, spec, p.budget.budget_s, seed, context.run_options);
    });

    std::vector<PerformanceCurve> curves;
    curves.reserve(n_spaces);
    HyperResult result;
    result.hyperconfig = spec.hyperparameters;
    result.repeats = repeats;
    for (std::size_t s = 0; s < n_spaces; ++s) {
        const auto& p = context.spaces[s];
        curves.push_back(performance_curve(traces[s], p.baseline, p.grid));
        curves.back().space_id = p.id;
        result.per_space.push_back(SpaceScore{p.id, curves.back().mean()});
        traces[s].clear();
    }
    std::sort(result.per_space.begin(), result.per_space.end(),
              [](const SpaceScore& a, const SpaceScore& b) { return a.space_id < b.space_id; });
    auto agg = aggregate_score(curves);
    result.score = agg.score;
    result.aggregate_curve = std::move(agg.curve);
    return result;
}

std::vector<HyperResult> exhaustive_tune(const HyperSpace& hyperspace,
                                         const ScoringContext& context) {
    std::vector<HyperResult> results(hyperspace.size());
    ScoringContext inner = context;
    inner.jobs = 1;
    parallel_for(hyperspace.size(), context.jobs, [&](std::size_t i) {
        results[i] = score_hyperconfig(hyperspace.spec_at(i), inner);
        results[i].grid_index = i;
        results[i].evaluation_rank = i;
    });
    std::stable_sort(results.begin(), results.end(),
                     [](const HyperResult& a, const HyperResult& b) { return a.score > b.score; });
    return results;
}

namespace {

/// The grid of hyperconfigurations seen as a search space over -score.
class HyperSpaceSource final : public EvaluationSource {
  public:
    HyperSpaceSource(const HyperSpace& hyperspace, const HyperScorer& scorer)
        : hyperspace_(&hyperspace), scorer_(&scorer) {}

    std::span<const std::size_t> cardinalities() const override {
        return hyperspace_->cardinalities();
    }
    std::size_t size() const override { return hyperspace_->size(); }
    Result evaluate(std::size_t flat) override {
        auto r = (*scorer_)(flat);
        r.grid_index = flat;
        r.evaluation_rank = evaluated.size();
        const double objective = -r.score;
        evaluated.push_back(std::move(r));
        return Result{objective, 1.0};
    }
    std::string key(std::size_t flat) const override { return hyperspace_->spec_at(flat).canonical(); }
    std::string id() const override {
        return "hyperspace:" + std::string(algorithm_name(hyperspace_->algorithm()));
    }

    std::vector<HyperResult> evaluated;

  private:
    const HyperSpace* hyperspace_;
    const HyperScorer* scorer_;
};

}  // namespace

MetaResult meta_tune(const HyperSpace& hyperspace, const OptimizerSpec& meta,
                     std::size_t meta_budget, const HyperScorer& scorer, std::uint64_t seed) {
    if (meta_budget < 1) throw ArgumentError("meta budget must be at least 1");
    validate_spec(meta);
    HyperSpaceSource source(hyperspace, scorer);
    Runner runner(source, static_cast<double>(meta_budget));
    Rng rng(seed);
    run_optimizer(meta, runner, rng);

    MetaResult out;
    out.trace = runner.finish(meta, seed);
    out.evaluated = std::move(source.evaluated);
    if (out.evaluated.empty()) throw ScoringError("meta strategy evaluated no configuration");
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.evaluated.size(); ++i) {
        const auto& a = out.evaluated[i];
        const auto& b = out.evaluated[best];
        if (a.score > b.score || (a.score == b.score && a.grid_index < b.grid_index)) best = i;
    }
    out.best = out.evaluated[best];
    return out;
}

MetaResult meta_tune(const HyperSpace& hyperspace, const OptimizerSpec& meta,
                     std::size_t meta_budget, const ScoringContext& context) {
    HyperScorer scorer = [&](std::size_t i) { return score_hyperconfig(hyperspace.spec_at(i), context); };
    return meta_tune(hyperspace, meta, meta_budget, scorer,
                     derive_seed(context.master_seed, "meta", meta.canonical(), 0));
}

GeneralizationReport generalization_report(const HyperConfig& best,
                                           const HyperConfig& reference, Algorithm algorithm,
                                           const ScoringContext& train,
                                           const ScoringContext& test, std::size_t repeats) {
    std::set<std::string> train_ids;
    for (const auto& p : train.spaces) train_ids.insert(p.id);
    for (const auto& p : test.spaces) {
        if (train_ids.count(p.id)) throw ArgumentError("space " + p.id + " is in both train and test sets");
    }
    GeneralizationReport report;
    report.best = best;
    report.reference = reference;
    report.repeats = repeats ? repeats : train.repeats;

    auto score_set = [&](const ScoringContext& base, bool is_train, double& best_out,
                         double& ref_out) {
        if (base.spaces.empty()) return;
        ScoringContext ctx = base;
        ctx.repeats = report.repeats;
        const auto b = score_hyperconfig(OptimizerSpec{algorithm, best}, ctx);
        const auto r = score_hyperconfig(OptimizerSpec{algorithm, reference}, ctx);
        best_out = b.score;
        ref_out = r.score;
        for (std::size_t i = 0; i < b.per_space.size(); ++i) {
            report.rows.push_back(GeneralizationRow{b.per_space[i].space_id, is_train,
                                                    b.per_space[i].score, r.per_space[i].score});
        }
    };
    score_set(train, true, report.train_best, report.train_reference);
    score_set(test, false, report.test_best, report.test_reference);
    report.train_improvement = relative_improvement(report.train_best, report.train_reference);
    report.test_improvement = relative_improvement(report.test_best, report.test_reference);
    return report;
}

std::size_t closest_to_mean(const std::vector<HyperResult>& results) {
    if (results.empty()) throw ArgumentError("no results");
    double mean = 0.0;
    for (const auto& r : results) mean += r.score;
    mean /= static_cast<double>(results.size());
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (std::fabs(results[i].score - mean) < std::fabs(results[best].score - mean)) best = i;
    }
    return best;
}

double relative_improvement(double best, double reference) {
    if (best == reference) return 0.0;
    if (reference == 0.0) return best - reference;
    return (best - reference) / std::fabs(reference);
}

}  // namespace metatune
