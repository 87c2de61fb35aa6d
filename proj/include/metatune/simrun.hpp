#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metatune/optimizer_spec.hpp"
#include "metatune/space.hpp"

namespace metatune {

/// Simulated seconds charged for evaluating a record: all recorded segments for a
/// valid record; compilation and framework overhead only for an invalid one.
double evaluation_cost(const ConfigRecord& record);

/// Something a Runner can evaluate: a finite discrete space addressed by flat
/// row-major index, answering with an objective (lower is better) and a cost.
class EvaluationSource {
  public:
    struct Result {
        std::optional<double> objective;  // empty for failed evaluations
        double cost_s = 0.0;
    };

    virtual ~EvaluationSource() = default;
    virtual std::span<const std::size_t> cardinalities() const = 0;
    virtual std::size_t size() const = 0;
    virtual Result evaluate(std::size_t flat) = 0;
    virtual std::string key(std::size_t flat) const = 0;
    virtual std::string id() const = 0;
};

/// Serves the cached records of a SearchSpace.
class CachedSpaceSource final : public EvaluationSource {
  public:
    explicit CachedSpaceSource(const SearchSpace& space) : space_(&space) {}

    std::span<const std::size_t> cardinalities() const override {
        return space_->cardinalities();
    }
    std::size_t size() const override { return space_->size(); }
    Result evaluate(std::size_t flat) override;
    std::string key(std::size_t flat) const override { return space_->key(flat); }
    std::string id() const override { return space_->meta().id(); }

  private:
    const SearchSpace* space_;
};

struct EvalEvent {
    std::size_t config = 0;  // flat index; rendered as the canonical key on export
    double completed_at_s = 0.0;
    std::optional<double> objective;
    bool invalid = false;
    bool revisit = false;
    double charged_cost_s = 0.0;
};

enum class StopReason { budget, space_exhausted, stalled, optimizer_finished };

std::string_view stop_reason_name(StopReason reason);

struct RunTrace {
    std::vector<EvalEvent> events;
    double simulated_end_s = 0.0;
    double budget_s = 0.0;
    std::uint64_t seed = 0;
    OptimizerSpec optimizer;
    std::string space_id;
    StopReason stop_reason = StopReason::optimizer_finished;
};

struct RunOptions {
    /// Constant optimizer compute time charged with every first visit.
    double proposal_overhead_s = 0.0;
    /// A run ends after this many consecutive revisits (an optimizer stuck on
    /// already-known configurations cannot advance the simulated clock).
    std::size_t max_consecutive_revisits = 100000;
};

/// Thrown by Runner::evaluate once the run is over; optimizers let it unwind.
struct RunExhausted {};

/// The simulated clock and evaluation gateway of a single run.
///
/// An evaluation may start only while the clock is strictly below the budget; the
/// evaluation that crosses the budget completes, is recorded and ends the run.
/// Revisits return the memoized result, cost nothing and are recorded as such.
class Runner {
  public:
    Runner(EvaluationSource& source, double budget_s, RunOptions options = {});

    std::span<const std::size_t> cardinalities() const { return source_->cardinalities(); }
    std::size_t dimensions() const { return source_->cardinalities().size(); }
    std::size_t size() const { return source_->size(); }

    bool exhausted() const noexcept { return stop_.has_value(); }
    double clock() const noexcept { return clock_; }
    double budget() const noexcept { return budget_; }
    std::size_t distinct_visits() const noexcept { return distinct_; }
    bool visited(std::size_t flat) const { return memo_.at(flat).seen; }

    /// Objective of a configuration, +infinity for invalid ones.
    /// Contract violation for out-of-range vectors; RunExhausted once the run is over.
    double evaluate(std::span<const std::size_t> indices);
    double evaluate_flat(std::size_t flat);

    std::size_t flatten(std::span<const std::size_t> indices) const;
    std::vector<std::size_t> unflatten(std::size_t flat) const;

    const std::vector<EvalEvent>& events() const noexcept { return events_; }

    /// Moves the recorded events into a trace.
    RunTrace finish(OptimizerSpec optimizer, std::uint64_t seed);

  private:
    struct Memo {
        bool seen = false;
        std::optional<double> objective;
    };

    EvaluationSource* source_;
    double budget_;
    RunOptions options_;
    double clock_ = 0.0;
    std::size_t distinct_ = 0;
    std::size_t consecutive_revisits_ = 0;
    std::vector<Memo> memo_;
    std::vector<std::size_t> strides_;
    std::vector<EvalEvent> events_;
    std::optional<StopReason> stop_;
};

/// Replays one optimizer run against a cached space. Deterministic in its inputs.
RunTrace simulate_run(const SearchSpace& space, const OptimizerSpec& optimizer,
                      double budget_s, std::uint64_t seed, const RunOptions& options = {});

/// Best valid objective among events completed by time t; empty if none.
std::optional<double> best_so_far(const RunTrace& trace, double t);

/// best_so_far at every time of an ascending list, in one pass.
std::vector<std::optional<double>> best_so_far_at(const RunTrace& trace,
                                                  std::span<const double> times);

/// JSON lines: a header object with run metadata, then one object per event.
void write_trace_jsonl(const RunTrace& trace, const EvaluationSource& source,
                       std::ostream& out);
std::string trace_to_jsonl(const RunTrace& trace, const EvaluationSource& source);

}  // namespace metatune
