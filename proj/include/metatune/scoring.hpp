#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "metatune/simrun.hpp"
#include "metatune/space.hpp"

namespace metatune {

/// Expected minimum of n draws without replacement from a pool of `total`
/// entries, of which `sorted_valid` (ascending) are valid and the rest occupy the
/// worst ranks. The event that every draw is invalid is valued at the worst valid
/// value.
double expected_min_after_n(std::span<const double> sorted_valid, std::size_t total,
                            std::size_t n);

enum class BaselineMode { analytic, montecarlo };

struct BaselinePoint {
    double time_s = 0.0;
    double expected_best = 0.0;
};

struct BaselineParams {
    std::size_t montecarlo_runs = 10000;
    std::uint64_t seed = 0;
    /// Number of curve points; 0 means one per configuration.
    std::size_t max_points = 0;
    std::size_t jobs = 1;
};

/// Expected best-so-far of random search over simulated time. Point n sits at
/// n times the mean evaluation cost.
struct BaselineCurve {
    BaselineMode mode = BaselineMode::analytic;
    std::vector<BaselinePoint> points;
    SpaceStats stats;
    std::string space_id;

    /// Stepwise (previous point) interpolation; times before the first point take
    /// the first point's value.
    double value_at(double t) const;
};

BaselineCurve baseline_curve(const SearchSpace& space, BaselineMode mode,
                             const BaselineParams& params = {});

struct Budget {
    double cutoff_fraction = 0.95;
    double threshold_objective = 0.0;
    double budget_s = 0.0;
};

/// Threshold = median - cutoff * (median - optimum); the budget is the earliest
/// baseline time at or below it.
Budget compute_budget(const BaselineCurve& baseline, double cutoff_fraction);
Budget compute_budget(const SearchSpace& space, const BaselineCurve& baseline,
                      double cutoff_fraction);

struct SamplingGrid {
    std::size_t count = 0;
    std::vector<double> times_s;  // times_s[i] = budget * (i + 1) / count
};

SamplingGrid make_sampling_grid(double budget_s, std::size_t count);

struct PerformanceCurve {
    std::vector<double> values;  // one per grid point
    SamplingGrid grid;
    std::size_t repeats = 0;
    std::string space_id;

    double mean() const;
};

/// Baseline-relative score of one time point: 0 at baseline parity, 1 at the
/// optimum, negative when worse than the baseline.
double relative_score(double baseline, double best, double optimum);

/// Mean best-so-far of the traces against the baseline at every grid time.
/// A trace with nothing found yet counts as the baseline at that time.
PerformanceCurve performance_curve(std::span<const RunTrace> traces,
                                   const BaselineCurve& baseline, const SamplingGrid& grid);

struct AggregateScore {
    std::vector<double> curve;
    double score = 0.0;
    std::vector<std::string> space_ids;  // sorted
};

/// Mean over curves at each grid index, then mean over indices. Independent of
/// the order of `curves`.
AggregateScore aggregate_score(std::span<const PerformanceCurve> curves);

void write_baseline_csv(const BaselineCurve& baseline, std::ostream& out);
void write_curve_csv(const PerformanceCurve& curve, std::ostream& out);

}  // namespace metatune
