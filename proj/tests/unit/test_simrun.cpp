#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "metatune/error.hpp"
#include "metatune/rng.hpp"
#include "metatune/simrun.hpp"
#include "support.hpp"

using namespace metatune;
using metatune::testing_support::grid_space;
using metatune::testing_support::line_space;

namespace {

const std::vector<OptimizerSpec>& all_algorithms() {
    static const std::vector<OptimizerSpec> specs = {
        {Algorithm::random_search, {}},
        {Algorithm::simulated_annealing, {}},
        {Algorithm::dual_annealing, {}},
        {Algorithm::genetic_algorithm, {}},
        {Algorithm::pso, {}},
    };
    return specs;
}

SearchSpace mixed_space() {
    SynthSpec spec{{4, 5, 6}, SynthFamily::sines, 0.2, {}};
    spec.cost.kind = CostModel::Kind::lognormal;
    return synth_space(spec, 21);
}

EvalEvent event(double t, std::optional<double> obj, bool revisit = false) {
    EvalEvent e;
    e.completed_at_s = t;
    e.objective = obj;
    e.invalid = !obj;
    e.revisit = revisit;
    return e;
}

}  // namespace

TEST(EvaluationCost, Examples) {
    ConfigRecord valid;
    valid.compile_time_s = 2.0;
    valid.runtimes_s = {0.4, 0.4, 0.8};
    valid.framework_time_s = 0.4;
    valid.objective = 1.0;
    EXPECT_DOUBLE_EQ(evaluation_cost(valid), 4.0);

    ConfigRecord invalid;
    invalid.invalid = true;
    invalid.compile_time_s = 1.5;
    invalid.framework_time_s = 0.1;
    invalid.runtimes_s = {9.0};
    invalid.verification_time_s = 9.0;
    EXPECT_DOUBLE_EQ(evaluation_cost(invalid), 1.6);

    EXPECT_EQ(evaluation_cost(ConfigRecord{}), 0.0);
}

TEST(SimulateRun, BudgetBelowCheapestCostGivesOneEvent) {
    const auto space = mixed_space();
    for (const auto& spec : all_algorithms()) {
        const auto trace = simulate_run(space, spec, 1e-6, 4);
        ASSERT_EQ(trace.events.size(), 1u) << algorithm_name(spec.algorithm);
        EXPECT_EQ(trace.stop_reason, StopReason::budget);
        EXPECT_GT(trace.simulated_end_s, trace.budget_s);
    }
}

TEST(SimulateRun, RandomSearchExhaustsTheSpace) {
    const auto space = mixed_space();
    double total = 0.0;
    for (const auto& r : space.records()) total += evaluation_cost(r);
    const auto trace = simulate_run(space, {Algorithm::random_search, {}}, total * 2.0, 8);
    EXPECT_EQ(trace.events.size(), space.size());
    EXPECT_EQ(trace.stop_reason, StopReason::space_exhausted);
    double best = INFINITY;
    for (const auto& e : trace.events) {
        if (e.objective) best = std::min(best, *e.objective);
    }
    EXPECT_EQ(best, space_stats(space).optimum);
    EXPECT_NEAR(trace.simulated_end_s, total, 1e-9 * total);
}

TEST(SimulateRun, DeterministicTraces) {
    const auto space = mixed_space();
    CachedSpaceSource src(space);
    for (const auto& spec : all_algorithms()) {
        const auto a = trace_to_jsonl(simulate_run(space, spec, 20.0, 17), src);
        const auto b = trace_to_jsonl(simulate_run(space, spec, 20.0, 17), src);
        EXPECT_EQ(a, b) << algorithm_name(spec.algorithm);
        const auto c = trace_to_jsonl(simulate_run(space, spec, 20.0, 18), src);
        EXPECT_NE(a, c) << algorithm_name(spec.algorithm);
    }
}

TEST(SimulateRun, TraceInvariants) {
    const auto space = mixed_space();
    for (const auto& spec : all_algorithms()) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto trace = simulate_run(space, spec, 30.0, seed);
            double sum = 0.0, prev = 0.0;
            for (const auto& e : trace.events) {
                ASSERT_GE(e.completed_at_s, prev);
                prev = e.completed_at_s;
                if (e.revisit) ASSERT_EQ(e.charged_cost_s, 0.0);
                if (e.invalid) ASSERT_FALSE(e.objective);
                sum += e.charged_cost_s;
            }
            ASSERT_NEAR(sum, trace.simulated_end_s, 1e-9);
            if (trace.stop_reason == StopReason::budget) {
                const auto& last = trace.events.back();
                ASSERT_LT(last.completed_at_s - last.charged_cost_s, trace.budget_s);
                ASSERT_LE(trace.simulated_end_s, trace.budget_s + last.charged_cost_s + 1e-12);
            }
        }
    }
}

TEST(SimulateRun, RejectsNonPositiveBudget) {
    const auto space = mixed_space();
    EXPECT_THROW(simulate_run(space, {}, 0.0, 1), ArgumentError);
    EXPECT_THROW(simulate_run(space, {}, -1.0, 1), ArgumentError);
}

TEST(SimulateRun, RejectsUnknownHyperparameter) {
    const auto space = mixed_space();
    OptimizerSpec spec{Algorithm::genetic_algorithm, {{"temperature", 1.0}}};
    EXPECT_THROW(simulate_run(space, spec, 10.0, 1), SpecError);
}

TEST(SimulateRun, OverheadChargedPerFirstVisit) {
    const auto space = line_space(std::vector<double>{5, 4, 3, 2, 1}, 1.0);
    RunOptions opt;
    opt.proposal_overhead_s = 0.5;
    const auto trace = simulate_run(space, {}, 100.0, 3, opt);
    ASSERT_EQ(trace.events.size(), 5u);
    for (const auto& e : trace.events) EXPECT_DOUBLE_EQ(e.charged_cost_s, 1.5);
    EXPECT_DOUBLE_EQ(trace.simulated_end_s, 7.5);
}

TEST(Runner, RevisitsAreFreeAndMemoized) {
    const auto space = line_space(std::vector<std::optional<double>>{3.0, std::nullopt, 1.0}, 2.0);
    CachedSpaceSource src(space);
    Runner runner(src, 100.0);
    EXPECT_EQ(runner.evaluate_flat(0), 3.0);
    EXPECT_TRUE(std::isinf(runner.evaluate_flat(1)));
    EXPECT_EQ(runner.evaluate_flat(0), 3.0);
    EXPECT_EQ(runner.clock(), 4.0);
    const auto& ev = runner.events();
    ASSERT_EQ(ev.size(), 3u);
    EXPECT_TRUE(ev[1].invalid);
    EXPECT_TRUE(ev[2].revisit);
    EXPECT_EQ(ev[2].charged_cost_s, 0.0);
    EXPECT_EQ(ev[2].completed_at_s, 4.0);
    EXPECT_EQ(runner.distinct_visits(), 2u);
}

TEST(Runner, ContractViolations) {
    const auto space = grid_space({3, 2}, [](std::size_t f) { return static_cast<double>(f); });
    CachedSpaceSource src(space);
    Runner runner(src, 100.0);
    const std::vector<std::size_t> out_of_range{3, 0};
    const std::vector<std::size_t> wrong_dim{0};
    EXPECT_THROW(runner.evaluate(out_of_range), ContractViolation);
    EXPECT_THROW(runner.evaluate(wrong_dim), ContractViolation);
    EXPECT_THROW(runner.evaluate_flat(6), ContractViolation);
    const std::vector<std::size_t> ok{2, 1};
    EXPECT_EQ(runner.evaluate(ok), 5.0);
}

TEST(Runner, CrossingEvaluationEndsTheRun) {
    const auto space = line_space(std::vector<double>{1, 2, 3, 4}, 3.0);
    CachedSpaceSource src(space);
    Runner runner(src, 5.0);
    runner.evaluate_flat(0);
    EXPECT_FALSE(runner.exhausted());
    runner.evaluate_flat(1);
    EXPECT_TRUE(runner.exhausted());
    EXPECT_THROW(runner.evaluate_flat(2), RunExhausted);
    const auto trace = runner.finish({}, 0);
    EXPECT_EQ(trace.events.size(), 2u);
    EXPECT_EQ(trace.simulated_end_s, 6.0);
    EXPECT_EQ(trace.stop_reason, StopReason::budget);
}

TEST(Runner, StallsAfterTooManyRevisits) {
    const auto space = line_space(std::vector<double>{1, 2}, 1.0);
    CachedSpaceSource src(space);
    RunOptions opt;
    opt.max_consecutive_revisits = 3;
    Runner runner(src, 100.0, opt);
    runner.evaluate_flat(0);
    for (int i = 0; i < 3; ++i) runner.evaluate_flat(0);
    EXPECT_TRUE(runner.exhausted());
    EXPECT_EQ(runner.finish({}, 0).stop_reason, StopReason::stalled);
}

TEST(BestSoFar, Examples) {
    RunTrace trace;
    trace.events = {event(1.0, 5.0), event(2.0, 3.0)};
    EXPECT_FALSE(best_so_far(trace, 0.5));
    EXPECT_EQ(best_so_far(trace, 1.5), 5.0);
    EXPECT_EQ(best_so_far(trace, 2.0), 3.0);
    const std::vector<double> times{0.5, 1.0, 1.5, 2.0, 9.0};
    const auto at = best_so_far_at(trace, times);
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(at[i], best_so_far(trace, times[i]));
}

TEST(BestSoFar, MonotoneAndUnaffectedByRevisits) {
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        RunTrace trace, without;
        double t = 0.0;
        const auto n = 1 + rng.uniform_index(30);
        for (std::size_t i = 0; i < n; ++i) {
            const bool revisit = i > 0 && rng.uniform01() < 0.3;
            if (!revisit) t += rng.uniform01();
            std::optional<double> obj;
            if (revisit) {
                obj = trace.events[rng.uniform_index(trace.events.size())].objective;
            } else if (rng.uniform01() < 0.8) {
                obj = rng.normal();
            }
            trace.events.push_back(event(t, obj, revisit));
            if (!revisit) without.events.push_back(event(t, obj));
        }
        std::optional<double> prev;
        for (double q = 0.0; q <= t + 0.5; q += 0.05) {
            const auto b = best_so_far(trace, q);
            ASSERT_EQ(b, best_so_far(without, q));
            if (prev) {
                ASSERT_TRUE(b.has_value());
                ASSERT_LE(*b, *prev);
            }
            prev = b;
        }
    }
}

TEST(TraceJsonl, HeaderThenOneLinePerEvent) {
    const auto space = mixed_space();
    CachedSpaceSource src(space);
    const auto trace = simulate_run(space, {Algorithm::genetic_algorithm, {{"popsize", 10.0}}}, 15.0, 2);
    const auto text = trace_to_jsonl(trace, src);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    const auto header = nlohmann::json::parse(line);
    EXPECT_EQ(header["type"], "header");
    EXPECT_EQ(header["optimizer"]["algorithm"], "genetic_algorithm");
    EXPECT_EQ(header["event_count"], trace.events.size());
    std::size_t count = 0;
    while (std::getline(in, line)) {
        const auto ev = nlohmann::json::parse(line);
        const auto& e = trace.events[count];
        EXPECT_EQ(ev["config_key"], space.key(e.config));
        EXPECT_EQ(ev["revisit"], e.revisit);
        EXPECT_EQ(ev["objective"].is_null(), !e.objective);
        ++count;
    }
    EXPECT_EQ(count, trace.events.size());
}
