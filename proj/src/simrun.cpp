#include "metatune/simrun.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metatune/error.hpp"
#include "metatune/optim.hpp"

namespace metatune {

double evaluation_cost(const ConfigRecord& record) {
    if (record.invalid) return record.compile_time_s + record.framework_time_s;
    double runtime = 0.0;
    for (double t : record.runtimes_s) runtime += t;
    return record.compile_time_s + runtime + record.verification_time_s + record.framework_time_s;
}

EvaluationSource::Result CachedSpaceSource::evaluate(std::size_t flat) {
    return Result{space_->oriented_objective(flat), evaluation_cost(space_->record(flat))};
}

std::string_view stop_reason_name(StopReason reason) {
    switch (reason) {
        case StopReason::budget: return "budget";
        case StopReason::space_exhausted: return "space_exhausted";
        case StopReason::stalled: return "stalled";
        case StopReason::optimizer_finished: return "optimizer_finished";
    }
    return "?";
}

Runner::Runner(EvaluationSource& source, double budget_s, RunOptions options)
    : source_(&source), budget_(budget_s), options_(options), memo_(source.size()) {
    if (!(budget_s > 0.0)) throw ArgumentError("run budget must be positive");
    if (options_.proposal_overhead_s < 0.0) throw ArgumentError("proposal overhead must be nonnegative");
    const auto cards = source.cardinalities();
    strides_.assign(cards.size(), 1);
    for (std::size_t i = cards.size(); i-- > 1;) strides_[i - 1] = strides_[i] * cards[i];
}

std::size_t Runner::flatten(std::span<const std::size_t> indices) const {
    const auto cards = source_->cardinalities();
    if (indices.size() != cards.size()) {
        throw ContractViolation("optimizer proposed a vector of dimension " +
                                std::to_string(indices.size()) + ", space has " +
                                std::to_string(cards.size()));
    }
    std::size_t flat = 0;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= cards[i]) {
            throw ContractViolation("optimizer proposed index " + std::to_string(indices[i]) +
                                    " in dimension " + std::to_string(i) + " (cardinality " +
                                    std::to_string(cards[i]) + ")");
        }
        flat += indices[i] * strides_[i];
    }
    return flat;
}

std::vector<std::size_t> Runner::unflatten(std::size_t flat) const {
    const auto cards = source_->cardinalities();
    std::vector<std::size_t> out(cards.size());
    for (std::size_t i = 0; i < cards.size(); ++i) out[i] = (flat / strides_[i]) % cards[i];
    return out;
}

double Runner::evaluate(std::span<const std::size_t> indices) {
    return evaluate_flat(flatten(indices));
}

double Runner::evaluate_flat(std::size_t flat) {
    if (flat >= memo_.size()) {
        throw ContractViolation("optimizer proposed configuration " + std::to_string(flat) +
                                " outside a space of " + std::to_string(memo_.size()));
    }
    if (stop_) throw RunExhausted{};

    constexpr double inf = std::numeric_limits<double>::infinity();
    auto& m = memo_[flat];
    EvalEvent ev;
    ev.config = flat;
    if (m.seen) {
        ev.revisit = true;
        ev.completed_at_s = clock_;
        ev.objective = m.objective;
        ev.invalid = !m.objective;
        events_.push_back(ev);
        if (++consecutive_revisits_ >= options_.max_consecutive_revisits) stop_ = StopReason::stalled;
        return m.objective.value_or(inf);
    }

    const auto result = source_->evaluate(flat);
    m.seen = true;
    m.objective = result.objective;
    ++distinct_;
    consecutive_revisits_ = 0;
    ev.charged_cost_s = result.cost_s + options_.proposal_overhead_s;
    clock_ += ev.charged_cost_s;
    ev.completed_at_s = clock_;
    ev.objective = result.objective;
    ev.invalid = !result.objective;
    events_.push_back(ev);

    if (clock_ >= budget_) {
        stop_ = StopReason::budget;
    } else if (distinct_ == memo_.size()) {
        stop_ = StopReason::space_exhausted;
    }
    return result.objective.value_or(inf);
}

RunTrace Runner::finish(OptimizerSpec optimizer, std::uint64_t seed) {
    RunTrace trace;
    trace.events = std::move(events_);
    events_.clear();
    trace.simulated_end_s = clock_;
    trace.budget_s = budget_;
    trace.seed = seed;
    trace.optimizer = std::move(optimizer);
    trace.space_id = source_->id();
    trace.stop_reason = stop_.value_or(StopReason::optimizer_finished);
    return trace;
}

RunTrace simulate_run(const SearchSpace& space, const OptimizerSpec& optimizer, double budget_s,
                      std::uint64_t seed, const RunOptions& options) {
    if (!(budget_s > 0.0)) throw ArgumentError("run budget must be positive");
    validate_spec(optimizer);
    CachedSpaceSource source(space);
    Runner runner(source, budget_s, options);
    Rng rng(seed);
    run_optimizer(optimizer, runner, rng);
    return runner.finish(optimizer, seed);
}

std::optional<double> best_so_far(const RunTrace& trace, double t) {
    std::optional<double> best;
    for (const auto& ev : trace.events) {
        if (ev.completed_at_s > t) break;
        if (ev.objective && (!best || *ev.objective < *best)) best = ev.objective;
    }
    return best;
}

std::vector<std::optional<double>> best_so_far_at(const RunTrace& trace,
                                                  std::span<const double> times) {
    std::vector<std::optional<double>> out(times.size());
    std::optional<double> best;
    std::size_t e = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        while (e < trace.events.size() && trace.events[e].completed_at_s <= times[i]) {
            const auto& obj = trace.events[e].objective;
            if (obj && (!best || *obj < *best)) best = obj;
            ++e;
        }
        out[i] = best;
    }
    return out;
}

void write_trace_jsonl(const RunTrace& trace, const EvaluationSource& source, std::ostream& out) {
    nlohmann::ordered_json header;
    header["type"] = "header";
    header["space_id"] = trace.space_id;
    header["optimizer"] = trace.optimizer.to_json();
    header["budget_s"] = trace.budget_s;
    header["seed"] = trace.seed;
    header["simulated_end_s"] = trace.simulated_end_s;
    header["event_count"] = trace.events.size();
    header["stop_reason"] = stop_reason_name(trace.stop_reason);
    out << header.dump() << '\n';
    for (const auto& ev : trace.events) {
        nlohmann::ordered_json line;
        line["config_key"] = source.key(ev.config);
        line["completed_at_s"] = ev.completed_at_s;
        line["objective"] = ev.objective ? nlohmann::ordered_json(*ev.objective) : nlohmann::ordered_json(nullptr);
        line["invalid"] = ev.invalid;
        line["revisit"] = ev.revisit;
        line["charged_cost_s"] = ev.charged_cost_s;
        out << line.dump() << '\n';
    }
}

std::string trace_to_jsonl(const RunTrace& trace, const EvaluationSource& source) {
    std::ostringstream ss;
    write_trace_jsonl(trace, source, ss);
    return ss.str();
}

}  // namespace metatune
