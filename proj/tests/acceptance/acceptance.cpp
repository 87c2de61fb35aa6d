// Acceptance checks: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "metatune/error.hpp"
#include "metatune/hypertune.hpp"
#include "metatune/optim.hpp"
#include "metatune/rng.hpp"
#include "metatune/scoring.hpp"
#include "metatune/simrun.hpp"
#include "metatune/space.hpp"
#include "../unit/support.hpp"

using namespace metatune;
using metatune::testing_support::grid_space;
using metatune::testing_support::line_space;
using metatune::testing_support::transform_space;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome ok(bool pass, std::string detail) { return {pass, std::move(detail)}; }

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::shared_ptr<const SearchSpace> synth(std::vector<std::size_t> cards, SynthFamily family,
                                         std::uint64_t seed, double invalid = 0.0,
                                         CostModel cost = {}) {
    SynthSpec spec{std::move(cards), family, invalid, cost};
    return std::make_shared<const SearchSpace>(synth_space(spec, seed));
}

ScoringContext context_for(const std::vector<std::shared_ptr<const SearchSpace>>& spaces,
                           std::size_t repeats, std::uint64_t master, std::size_t grid_count = 20) {
    ScoringContext ctx;
    for (const auto& s : spaces) ctx.spaces.push_back(prepare_space(s, 0.95, grid_count));
    ctx.repeats = repeats;
    ctx.master_seed = master;
    return ctx;
}

// ---------------------------------------------------------------------------

Outcome c1_endpoints() {
    std::vector<double> objectives;
    for (int i = 0; i < 40; ++i) objectives.push_back(3.0 + 0.25 * i);
    const auto space = line_space(objectives, 1.0, "endpoints");
    const auto baseline = baseline_curve(space, BaselineMode::analytic);
    const auto budget = compute_budget(baseline, 0.95);
    const auto grid = make_sampling_grid(budget.budget_s, 25);
    const double optimum = baseline.stats.optimum;

    // A trace that matches the baseline at every grid time.
    RunTrace at_baseline;
    at_baseline.space_id = baseline.space_id;
    for (double t : grid.times_s) {
        EvalEvent e;
        e.completed_at_s = t;
        e.objective = baseline.value_at(t);
        at_baseline.events.push_back(e);
    }
    // A trace that holds the optimum from the first grid time on.
    RunTrace at_optimum;
    at_optimum.space_id = baseline.space_id;
    EvalEvent e;
    e.completed_at_s = grid.times_s.front() * 0.5;
    e.objective = optimum;
    at_optimum.events.push_back(e);

    const auto zero = performance_curve(std::span(&at_baseline, 1), baseline, grid);
    const auto one = performance_curve(std::span(&at_optimum, 1), baseline, grid);
    bool pass = true;
    for (double v : zero.values) pass = pass && v == 0.0;
    for (double v : one.values) pass = pass && v == 1.0;
    for (double b : {1.0, 7.5, -2.0}) {
        pass = pass && relative_score(b, b, b - 1.0) == 0.0 && relative_score(b, b - 1.0, b - 1.0) == 1.0;
    }
    return ok(pass, fmt("%zu grid points, P=0 at baseline and P=1 at optimum", grid.count));
}

// ---------------------------------------------------------------------------

double subset_oracle(const std::vector<double>& values_with_invalid_as_nan, std::size_t n) {
    const std::size_t N = values_with_invalid_as_nan.size();
    double worst = -std::numeric_limits<double>::infinity();
    for (double v : values_with_invalid_as_nan) {
        if (!std::isnan(v)) worst = std::max(worst, v);
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (unsigned mask = 0; mask < (1u << N); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < N; ++i) {
            const double v = values_with_invalid_as_nan[i];
            if ((mask >> i) & 1u && !std::isnan(v)) best = std::min(best, v);
        }
        sum += std::isinf(best) ? worst : best;
        ++count;
    }
    return sum / static_cast<double>(count);
}

Outcome c2_baseline_oracle() {
    Rng rng(2024);
    double worst_err = 0.0;
    std::size_t checks = 0;
    for (std::size_t N = 1; N <= 8; ++N) {
        for (std::size_t V = 1; V <= N; ++V) {
            for (int trial = 0; trial < 25; ++trial) {
                std::vector<double> values(N, std::nan(""));
                std::vector<double> valid;
                for (std::size_t i = 0; i < V; ++i) {
                    double v = rng.normal() * 3.0;
                    if (trial % 2 == 0) v = std::round(v);  // ties
                    valid.push_back(v);
                }
                // Invalid entries are shuffled into arbitrary positions.
                std::vector<std::size_t> pos(N);
                std::iota(pos.begin(), pos.end(), 0);
                std::shuffle(pos.begin(), pos.end(), rng);
                for (std::size_t i = 0; i < V; ++i) values[pos[i]] = valid[i];
                std::sort(valid.begin(), valid.end());
                for (std::size_t n = 1; n <= N; ++n) {
                    const double got = expected_min_after_n(valid, N, n);
                    worst_err = std::max(worst_err, std::fabs(got - subset_oracle(values, n)));
                    ++checks;
                }
            }
        }
    }

    const auto space = synth({5, 5, 8}, SynthFamily::sines, 11);
    const auto analytic = baseline_curve(*space, BaselineMode::analytic);
    BaselineParams mc_params;
    mc_params.montecarlo_runs = 10000;
    mc_params.seed = 5;
    const auto mc = baseline_curve(*space, BaselineMode::montecarlo, mc_params);
    double worst_rel = 0.0;
    bool same_shape = mc.points.size() == analytic.points.size() && space->size() == 200;
    for (std::size_t k = 0; same_shape && k < mc.points.size(); ++k) {
        const double a = analytic.points[k].expected_best;
        worst_rel = std::max(worst_rel, std::fabs(mc.points[k].expected_best - a) / std::fabs(a));
    }
    return ok(worst_err <= 1e-12 && same_shape && worst_rel < 0.01,
              fmt("%zu subset checks, max abs err %.2e; 10000-run MC max rel err %.4f%%", checks,
                  worst_err, 100.0 * worst_rel));
}

// ---------------------------------------------------------------------------

Outcome c3_budget() {
    std::vector<double> objectives;
    for (int i = 1; i <= 100; ++i) objectives.push_back(i);
    const auto space = line_space(objectives, 1.0, "uniform100");
    const auto baseline = baseline_curve(space, BaselineMode::analytic);
    bool closed_form = baseline.points.size() == 100;
    for (std::size_t k = 0; closed_form && k < baseline.points.size(); ++k) {
        const double n = static_cast<double>(k + 1);
        closed_form = std::fabs(baseline.points[k].expected_best - 101.0 / (n + 1.0)) <= 1e-12 &&
                      baseline.points[k].time_s == n;
    }
    const auto budget = compute_budget(baseline, 0.95);
    const bool pass = closed_form && std::fabs(budget.threshold_objective - 3.475) <= 1e-12 &&
                      budget.budget_s == 29.0;
    return ok(pass, fmt("threshold %.6f, budget %.1f s", budget.threshold_objective, budget.budget_s));
}

// ---------------------------------------------------------------------------

Outcome c4_grids() {
    const auto da = build_hyperspace(Algorithm::dual_annealing, reference_grid(Algorithm::dual_annealing)).size();
    const auto ga = build_hyperspace(Algorithm::genetic_algorithm, reference_grid(Algorithm::genetic_algorithm)).size();
    const auto pso = build_hyperspace(Algorithm::pso, reference_grid(Algorithm::pso)).size();
    const auto sa = build_hyperspace(Algorithm::simulated_annealing, reference_grid(Algorithm::simulated_annealing)).size();
    const std::size_t default_repeats = ScoringContext{}.repeats;
    const std::size_t runs = ga * default_repeats * 12;

    // The run count per configuration and space is the repeat count.
    const auto space = synth({3, 3, 3}, SynthFamily::quadratic, 1);
    auto ctx = context_for({space}, default_repeats, 0);
    const auto hs = build_hyperspace(Algorithm::genetic_algorithm, reference_grid(Algorithm::genetic_algorithm));
    const auto traces = run_repeats(hs.spec_at(0), ctx.spaces[0], ctx);

    const bool pass = da == 8 && ga == 108 && pso == 81 && sa == 81 && runs == 32400 &&
                      traces.size() == default_repeats;
    return ok(pass, fmt("DA %zu, GA %zu, PSO %zu, SA %zu; GA runs %zu x %zu x 12 = %zu", da, ga, pso, sa,
                        ga, default_repeats, runs));
}

// ---------------------------------------------------------------------------

Outcome c5_speedup() {
    CostModel cost;
    cost.kind = CostModel::Kind::lognormal;
    cost.compile_s = 60.0;
    cost.runtime_s = 2.0;
    const auto space = synth({20, 20, 25}, SynthFamily::quadratic, 3, 0.1, cost);
    const auto prepared = prepare_space(space, 0.95, 20);
    const auto start = std::chrono::steady_clock::now();
    const auto trace = simulate_run(*space, {Algorithm::random_search, {}}, prepared.budget.budget_s, 1);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double ratio = trace.simulated_end_s / std::max(wall, 1e-9);
    const bool pass = prepared.budget.budget_s >= 1000.0 && trace.stop_reason == StopReason::budget &&
                      wall < 10.0 && ratio >= 100.0;
    return ok(pass, fmt("budget %.0f s simulated, %zu evaluations in %.4f s wall, ratio %.3gx",
                        prepared.budget.budget_s, trace.events.size(), wall, ratio));
}

// ---------------------------------------------------------------------------

Outcome c6_determinism() {
    CostModel cost;
    cost.kind = CostModel::Kind::lognormal;
    const auto space = synth({4, 5, 6}, SynthFamily::sines, 21, 0.2, cost);
    CachedSpaceSource src(*space);
    const std::vector<OptimizerSpec> specs = {
        {Algorithm::random_search, {}},
        {Algorithm::simulated_annealing, {}},
        {Algorithm::dual_annealing, {}},
        {Algorithm::genetic_algorithm, {{"popsize", 20.0}}},
        {Algorithm::pso, {}},
    };
    bool pass = true;
    std::size_t runs = 0, revisits = 0;
    for (const auto& spec : specs) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto a = simulate_run(*space, spec, 60.0, seed);
            const auto b = simulate_run(*space, spec, 60.0, seed);
            pass = pass && trace_to_jsonl(a, src) == trace_to_jsonl(b, src);
            double sum = 0.0;
            for (const auto& e : a.events) {
                if (e.revisit) {
                    ++revisits;
                    pass = pass && e.charged_cost_s == 0.0;
                }
                sum += e.charged_cost_s;
            }
            pass = pass && sum == a.simulated_end_s;
            ++runs;
        }
    }
    return ok(pass && revisits > 0,
              fmt("%zu run pairs byte-identical, %zu revisits charged 0, cost sums exact", runs, revisits));
}

// ---------------------------------------------------------------------------

GridDefinition twelve_point_ga_grid() {
    return {{"method", {std::string("single_point"), std::string("uniform"), std::string("disruptive_uniform")}},
            {"popsize", {6.0, 14.0}},
            {"mutation_chance", {3.0, 20.0}}};
}

double oracle_score(const OptimizerSpec& spec, const ScoringContext& ctx) {
    const auto h_id = spec.canonical();
    std::vector<std::vector<double>> per_space;
    for (const auto& p : ctx.spaces) {
        std::vector<double> sums(p.grid.times_s.size(), 0.0);
        for (std::size_t r = 0; r < ctx.repeats; ++r) {
            const auto seed = derive_seed(ctx.master_seed, p.id, h_id, r);
            const auto trace = simulate_run(*p.space, spec, p.budget.budget_s, seed, ctx.run_options);
            for (std::size_t i = 0; i < p.grid.times_s.size(); ++i) {
                const double t = p.grid.times_s[i];
                sums[i] += best_so_far(trace, t).value_or(p.baseline.value_at(t));
            }
        }
        std::vector<double> curve;
        for (std::size_t i = 0; i < sums.size(); ++i) {
            const double base = p.baseline.value_at(p.grid.times_s[i]);
            const double mean = sums[i] / static_cast<double>(ctx.repeats);
            curve.push_back((base - mean) / (base - p.stats.optimum));
        }
        per_space.push_back(curve);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < per_space.front().size(); ++i) {
        double col = 0.0;
        for (const auto& c : per_space) col += c[i];
        total += col / static_cast<double>(per_space.size());
    }
    return total / static_cast<double>(per_space.front().size());
}

Outcome c7_exhaustive_argmax() {
    const auto ctx = context_for({synth({6, 6, 8}, SynthFamily::quadratic, 31, 0.1),
                                  synth({5, 8, 8}, SynthFamily::sines, 32),
                                  synth({4, 6, 6, 3}, SynthFamily::rank, 33, 0.2)},
                                 10, 77);
    const auto hs = build_hyperspace(Algorithm::genetic_algorithm, twelve_point_ga_grid());
    const auto ranked = exhaustive_tune(hs, ctx);
    std::vector<double> oracle(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) oracle[i] = oracle_score(hs.spec_at(i), ctx);
    const auto argmax = static_cast<std::size_t>(std::max_element(oracle.begin(), oracle.end()) - oracle.begin());
    double worst = 0.0;
    for (const auto& r : ranked) worst = std::max(worst, std::fabs(r.score - oracle[r.grid_index]));
    const bool pass = hs.size() == 12 && ranked.size() == 12 && ranked.front().grid_index == argmax && worst <= 1e-9;
    return ok(pass, fmt("winner grid index %zu (oracle argmax %zu, score %.4f), max score diff %.2e",
                        ranked.front().grid_index, argmax, oracle[argmax], worst));
}

// ---------------------------------------------------------------------------

Outcome c8_meta_efficiency() {
    const auto ctx = context_for({synth({8, 8, 6}, SynthFamily::sines, 41, 0.1),
                                  synth({6, 8, 8}, SynthFamily::quadratic, 42),
                                  synth({5, 5, 5, 4}, SynthFamily::rank, 43, 0.15)},
                                 8, 9);
    const auto hs = build_hyperspace(Algorithm::pso, reference_grid(Algorithm::pso));
    std::vector<HyperResult> table(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        table[i] = score_hyperconfig(hs.spec_at(i), ctx);
        table[i].grid_index = i;
    }
    std::vector<double> sorted;
    for (const auto& r : table) sorted.push_back(r.score);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t decile = (hs.size() + 9) / 10;
    const double cut = sorted[decile - 1];

    const OptimizerSpec meta{Algorithm::genetic_algorithm,
                             {{"method", std::string("uniform")},
                              {"popsize", 10.0},
                              {"maxiter", 50.0},
                              {"mutation_chance", 10.0}}};
    std::size_t hits = 0, max_evals = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto res = meta_tune(hs, meta, 25, [&](std::size_t i) { return table[i]; }, seed);
        max_evals = std::max(max_evals, res.evaluated.size());
        if (res.best.score >= cut) ++hits;
    }
    return ok(hits >= 18 && max_evals <= 25,
              fmt("top-%zu hit in %zu/20 seeds at <= %zu evaluations", decile, hits, max_evals));
}

// ---------------------------------------------------------------------------

Outcome c9_tuning_impact() {
    CostModel cost;
    cost.kind = CostModel::Kind::lognormal;
    const auto train = context_for({synth({8, 8, 8, 4}, SynthFamily::quadratic, 51, 0.1, cost),
                                    synth({6, 8, 8, 6}, SynthFamily::sines, 52, 0.05, cost),
                                    synth({10, 10, 16}, SynthFamily::rank, 53, 0.2, cost),
                                    synth({8, 8, 4, 4, 2}, SynthFamily::quadratic, 54, 0.0, cost),
                                    synth({12, 12, 12}, SynthFamily::sines, 55, 0.1, cost),
                                    synth({6, 6, 6, 6}, SynthFamily::rank, 56, 0.1, cost)},
                                   10, 61);
    auto test = context_for({synth({8, 8, 6, 4}, SynthFamily::sines, 71, 0.1, cost),
                             synth({10, 8, 8, 2}, SynthFamily::quadratic, 72, 0.05, cost),
                             synth({7, 7, 7, 3}, SynthFamily::rank, 73, 0.15, cost)},
                            10, 62);
    const auto hs = build_hyperspace(Algorithm::genetic_algorithm, reference_grid(Algorithm::genetic_algorithm));
    const auto ranked = exhaustive_tune(hs, train);
    const auto& median = ranked[ranked.size() / 2];
    const auto& best = ranked.front();
    const auto gen = generalization_report(best.hyperconfig, median.hyperconfig,
                                           Algorithm::genetic_algorithm, train, test, 10);
    const bool pass = best.score > median.score && gen.test_best > gen.test_reference;
    return ok(pass, fmt("train best %.4f vs median %.4f; held-out best %.4f vs median %.4f", best.score,
                        median.score, gen.test_best, gen.test_reference));
}

// ---------------------------------------------------------------------------

constexpr int kCases = 1000;

bool affine_invariance(std::size_t& checked) {
    Rng rng(101);
    const std::vector<OptimizerSpec> specs = {
        {Algorithm::random_search, {}},
        {Algorithm::genetic_algorithm, {{"popsize", 6.0}}},
        {Algorithm::pso, {{"popsize", 6.0}}},
        {Algorithm::simulated_annealing, {}},
        {Algorithm::dual_annealing, {{"method", std::string("Powell")}}},
    };
    for (int c = 0; c < kCases; ++c) {
        const std::vector<std::size_t> cards{2 + rng.uniform_index(5), 2 + rng.uniform_index(5)};
        std::vector<double> values(cards[0] * cards[1]);
        for (auto& v : values) v = rng.normal() + 2.0;
        const double invalid_p = 0.15 * rng.uniform01();
        std::vector<bool> invalid(values.size());
        for (std::size_t i = 1; i < values.size(); ++i) invalid[i] = rng.uniform01() < invalid_p;
        const auto base = grid_space(cards, [&](std::size_t f) -> std::optional<double> {
            if (invalid[f]) return std::nullopt;
            return values[f];
        }, 1.0, "affine");
        // Annealers compare relative changes, which a shift does not preserve.
        const auto spec_a = specs[rng.uniform_index(3)];
        const auto spec_b = specs[3 + rng.uniform_index(2)];
        const double scale = std::exp(rng.uniform01() * 4.0 - 2.0);
        const double shift = rng.uniform01() * 10.0 - 5.0;

        auto score_pair = [&](const SearchSpace& s, const OptimizerSpec& spec) {
            auto ctx = context_for({std::make_shared<const SearchSpace>(s)}, 2, 5, 8);
            return score_hyperconfig(spec, ctx).score;
        };
        const auto affine = transform_space(base, [&](double v) { return scale * v + shift; });
        const auto scaled = transform_space(base, [&](double v) { return scale * v; });
        const double a0 = score_pair(base, spec_a), a1 = score_pair(affine, spec_a);
        const double b0 = score_pair(base, spec_b), b1 = score_pair(scaled, spec_b);
        if (std::fabs(a0 - a1) > 1e-9 || std::fabs(b0 - b1) > 1e-9) return false;
        if (std::fabs(a0 - b0) > 1e-9 && ((a0 > b0) != (a1 > b1))) return false;
        ++checked;
    }
    return true;
}

bool crossover_conservation(std::size_t& checked) {
    Rng rng(102);
    const CrossoverMethod methods[] = {CrossoverMethod::single_point, CrossoverMethod::two_point,
                                       CrossoverMethod::uniform, CrossoverMethod::disruptive_uniform};
    for (int c = 0; c < kCases; ++c) {
        const std::size_t d = 1 + rng.uniform_index(8);
        IndexVector p1(d), p2(d);
        for (std::size_t i = 0; i < d; ++i) {
            p1[i] = rng.uniform_index(6);
            p2[i] = rng.uniform_index(6);
        }
        for (auto m : methods) {
            const auto [c1, c2] = crossover(p1, p2, m, rng);
            if (c1.size() != d || c2.size() != d) return false;
            for (std::size_t i = 0; i < d; ++i) {
                const bool same = c1[i] == p1[i] && c2[i] == p2[i];
                const bool swapped = c1[i] == p2[i] && c2[i] == p1[i];
                if (!same && !swapped) return false;
            }
        }
        ++checked;
    }
    return true;
}

bool pso_clamping(std::size_t& checked) {
    Rng rng(103);
    for (int c = 0; c < kCases; ++c) {
        const std::size_t d = 1 + rng.uniform_index(6);
        std::vector<std::size_t> cards(d);
        std::vector<double> x(d), v(d), pb(d), gb(d);
        for (std::size_t i = 0; i < d; ++i) {
            cards[i] = 1 + rng.uniform_index(10);
            const double hi = static_cast<double>(cards[i] - 1);
            x[i] = rng.uniform01() * hi;
            pb[i] = rng.uniform01() * hi;
            gb[i] = rng.uniform01() * hi;
            v[i] = rng.normal() * 20.0;
        }
        const auto nv = pso_velocity_update(v, x, pb, gb, 0.5 + rng.uniform01(), 3.0 * rng.uniform01(),
                                            3.0 * rng.uniform01(), rng);
        const auto nx = pso_position_update(x, nv, cards);
        const auto idx = round_position(nx, cards);
        for (std::size_t i = 0; i < d; ++i) {
            const double hi = static_cast<double>(cards[i] - 1);
            if (!(nx[i] >= 0.0 && nx[i] <= hi) || idx[i] >= cards[i]) return false;
            const double unclamped = x[i] + nv[i];
            if (unclamped >= 0.0 && unclamped <= hi && nx[i] != unclamped) return false;
        }
        ++checked;
    }
    return true;
}

bool sa_monotone(std::size_t& checked) {
    Rng rng(104);
    for (int c = 0; c < kCases; ++c) {
        const double f_old = rng.normal() * 5.0;
        double f1 = f_old + rng.normal() * 3.0, f2 = f_old + rng.normal() * 3.0;
        if (f1 > f2) std::swap(f1, f2);
        double t1 = 0.01 + rng.uniform01() * 3.0, t2 = 0.01 + rng.uniform01() * 3.0;
        if (t1 > t2) std::swap(t1, t2);
        for (auto mode : {DeltaMode::relative, DeltaMode::absolute}) {
            const double p1 = sa_accept_probability(f_old, f1, t1, mode);
            const double p2 = sa_accept_probability(f_old, f2, t1, mode);
            const double p_hot = sa_accept_probability(f_old, f2, t2, mode);
            if (!(p1 >= p2) || !(p_hot >= p2)) return false;
            if (!(p2 >= 0.0 && p2 <= 1.0)) return false;
            if (f1 <= f_old && p1 != 1.0) return false;
        }
        ++checked;
    }
    return true;
}

bool best_so_far_monotone(std::size_t& checked) {
    Rng rng(105);
    for (int c = 0; c < kCases; ++c) {
        RunTrace trace;
        double t = 0.0;
        const auto n = 1 + rng.uniform_index(40);
        for (std::size_t i = 0; i < n; ++i) {
            EvalEvent e;
            const bool revisit = i > 0 && rng.uniform01() < 0.25;
            if (!revisit) t += rng.uniform01() * 2.0;
            e.completed_at_s = t;
            e.revisit = revisit;
            if (rng.uniform01() < 0.8) e.objective = rng.normal();
            e.invalid = !e.objective;
            trace.events.push_back(e);
        }
        std::vector<double> times;
        for (double q = 0.0; q <= t + 1.0; q += 0.1) times.push_back(q);
        const auto at = best_so_far_at(trace, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (at[i] != best_so_far(trace, times[i])) return false;
            if (i > 0 && at[i - 1] && (!at[i] || *at[i] > *at[i - 1])) return false;
        }
        ++checked;
    }
    return true;
}

Outcome c10_invariance() {
    std::size_t counts[5] = {};
    const bool results[5] = {affine_invariance(counts[0]), crossover_conservation(counts[1]),
                             pso_clamping(counts[2]), sa_monotone(counts[3]),
                             best_so_far_monotone(counts[4])};
    bool pass = true;
    for (int i = 0; i < 5; ++i) pass = pass && results[i] && counts[i] >= 1000;
    return ok(pass, fmt("cases passed: affine %zu, crossover %zu, clamping %zu, acceptance %zu, best-so-far %zu",
                        counts[0], counts[1], counts[2], counts[3], counts[4]));
}

struct Criterion {
    const char* id;
    const char* title;
    double limit_s;
    std::function<Outcome()> check;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"C1", "score endpoints", 1.0, c1_endpoints},
        {"C2", "baseline oracle", 120.0, c2_baseline_oracle},
        {"C3", "budget hand-check", 1.0, c3_budget},
        {"C4", "grid cardinalities", 1.0, c4_grids},
        {"C5", "simulation speedup", 60.0, c5_speedup},
        {"C6", "determinism and memoization", 60.0, c6_determinism},
        {"C7", "exhaustive argmax oracle", 300.0, c7_exhaustive_argmax},
        {"C8", "meta-strategy efficiency", 600.0, c8_meta_efficiency},
        {"C9", "tuning impact direction", 900.0, c9_tuning_impact},
        {"C10", "invariance properties", 300.0, c10_invariance},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.check();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool pass = out.pass && secs < c.limit_s;
        if (!pass) ++failures;
        std::printf("[%s] %s %s: %s (%.3f s, limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.title,
                    out.detail.c_str(), secs, c.limit_s);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
