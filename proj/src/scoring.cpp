#include "metatune/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "metatune/error.hpp"
#include "metatune/parallel.hpp"
#include "metatune/rng.hpp"

namespace metatune {

namespace {

class NeumaierSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::vector<std::size_t> baseline_draw_counts(std::size_t total, std::size_t max_points) {
    std::vector<std::size_t> counts;
    if (max_points == 0 || max_points >= total) {
        counts.resize(total);
        for (std::size_t n = 1; n <= total; ++n) counts[n - 1] = n;
        return counts;
    }
    if (max_points == 1) return {1};
    for (std::size_t k = 0; k < max_points; ++k) {
        const std::size_t n = 1 + k * (total - 1) / (max_points - 1);
        if (counts.empty() || counts.back() != n) counts.push_back(n);
    }
    return counts;
}

}  // namespace

double expected_min_after_n(std::span<const double> sorted_valid, std::size_t total,
                            std::size_t n) {
    if (sorted_valid.empty()) throw ArgumentError("expected minimum needs at least one valid value");
    if (sorted_valid.size() > total) throw ArgumentError("more valid values than pool entries");
    if (n < 1 || n > total) {
        throw ArgumentError("draw count " + std::to_string(n) + " outside [1, " +
                            std::to_string(total) + "]");
    }
    // S(r) = P(all n draws avoid the r-1 best entries) = C(N-r+1, n) / C(N, n).
    // E[min] = v_1 + sum_{r>=2} (v_r - v_{r-1}) S(r), with the all-invalid event
    // valued at v_V.
    const double big_n = static_cast<double>(total);
    const double draws = static_cast<double>(n);
    NeumaierSum sum;
    sum.add(sorted_valid[0]);
    double survival = 1.0;
    for (std::size_t r = 2; r <= sorted_valid.size(); ++r) {
        const double rr = static_cast<double>(r);
        const double remaining = big_n - rr + 2.0;
        survival *= (remaining - draws) / remaining;
        if (survival <= 0.0 || survival < 1e-20) break;
        sum.add((sorted_valid[r - 1] - sorted_valid[r - 2]) * survival);
    }
    return sum.value();
}

double BaselineCurve::value_at(double t) const {
    if (points.empty()) throw ArgumentError("empty baseline curve");
    auto it = std::upper_bound(points.begin(), points.end(), t,
                               [](double x, const BaselinePoint& p) { return x < p.time_s; });
    if (it == points.begin()) return points.front().expected_best;
    return std::prev(it)->expected_best;
}

BaselineCurve baseline_curve(const SearchSpace& space, BaselineMode mode,
                             const BaselineParams& params) {
    BaselineCurve curve;
    curve.mode = mode;
    curve.stats = space_stats(space);
    curve.space_id = space.meta().id();
    const std::size_t total = space.size();
    const double cost = curve.stats.mean_eval_cost_s;
    const auto counts = baseline_draw_counts(total, params.max_points);

    std::vector<double> valid;
    valid.reserve(curve.stats.valid_count);
    for (std::size_t f = 0; f < total; ++f) {
        if (const auto v = space.oriented_objective(f)) valid.push_back(*v);
    }
    std::sort(valid.begin(), valid.end());

    curve.points.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
        curve.points[k].time_s = static_cast<double>(counts[k]) * cost;
    }

    if (mode == BaselineMode::analytic) {
        for (std::size_t k = 0; k < counts.size(); ++k) {
            curve.points[k].expected_best = expected_min_after_n(valid, total, counts[k]);
        }
        return curve;
    }

    if (params.montecarlo_runs == 0) throw ArgumentError("Monte Carlo baseline needs at least one run");
    const double worst = valid.back();
    std::vector<double> times(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) times[k] = curve.points[k].time_s * (1.0 + 1e-9);
    const double budget = std::max(times.back(), std::numeric_limits<double>::min());
    OptimizerSpec random{Algorithm::random_search, {}};

    const std::size_t runs = params.montecarlo_runs;
    std::vector<std::vector<double>> samples(runs);
    parallel_for(runs, params.jobs, [&](std::size_t r) {
        const auto seed = derive_seed(params.seed, curve.space_id, "baseline", r);
        const auto trace = simulate_run(space, random, budget, seed);
        const auto best = best_so_far_at(trace, times);
        auto& out = samples[r];
        out.resize(best.size());
        for (std::size_t k = 0; k < best.size(); ++k) out[k] = best[k].value_or(worst);
    });
    for (std::size_t k = 0; k < counts.size(); ++k) {
        NeumaierSum sum;
        for (const auto& s : samples) sum.add(s[k]);
        curve.points[k].expected_best = sum.value() / static_cast<double>(runs);
    }
    // A sample mean can wiggle upward by rounding; the curve is monotone by definition.
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        curve.points[k].expected_best =
            std::min(curve.points[k].expected_best, curve.points[k - 1].expected_best);
    }
    return curve;
}

Budget compute_budget(const BaselineCurve& baseline, double cutoff_fraction) {
    if (!(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0)) {
        throw ArgumentError("cutoff fraction must lie in (0, 1]");
    }
    if (baseline.points.empty()) throw ArgumentError("empty baseline curve");
    const auto& st = baseline.stats;
    Budget b;
    b.cutoff_fraction = cutoff_fraction;
    b.threshold_objective = st.median_valid - cutoff_fraction * (st.median_valid - st.optimum);
    const double slack = 1e-12 * std::max(1.0, std::fabs(b.threshold_objective));
    for (const auto& p : baseline.points) {
        if (p.expected_best <= b.threshold_objective + slack) {
            b.budget_s = p.time_s;
            if (!(b.budget_s > 0.0)) break;
            return b;
        }
    }
    throw UnreachableBudget("baseline of " + baseline.space_id + " never reaches the threshold " +
                            format_number(b.threshold_objective));
}

Budget compute_budget(const SearchSpace& space, const BaselineCurve& baseline,
                      double cutoff_fraction) {
    if (baseline.space_id != space.meta().id()) {
        throw ArgumentError("baseline belongs to " + baseline.space_id + ", not " + space.meta().id());
    }
    return compute_budget(baseline, cutoff_fraction);
}

SamplingGrid make_sampling_grid(double budget_s, std::size_t count) {
    if (count < 2) throw ArgumentError("sampling grid needs at least 2 points");
    if (!(budget_s > 0.0)) throw ArgumentError("sampling grid needs a positive budget");
    SamplingGrid g;
    g.count = count;
    g.times_s.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        g.times_s[i] = budget_s * static_cast<double>(i + 1) / static_cast<double>(count);
    }
    return g;
}

double PerformanceCurve::mean() const {
    if (values.empty()) return 0.0;
    NeumaierSum sum;
    for (double v : values) sum.add(v);
    return sum.value() / static_cast<double>(values.size());
}

double relative_score(double baseline, double best, double optimum) {
    const double denom = baseline - optimum;
    if (!(denom > 0.0)) return best <= optimum ? 1.0 : 0.0;
    return (baseline - best) / denom;
}

PerformanceCurve performance_curve(std::span<const RunTrace> traces,
                                   const BaselineCurve& baseline, const SamplingGrid& grid) {
    if (traces.empty()) throw ArgumentError("performance curve needs at least one trace");
    for (const auto& t : traces) {
        if (t.space_id != baseline.space_id) {
            throw ArgumentError("trace from " + t.space_id + " scored against the baseline of " +
                                baseline.space_id);
        }
    }
    PerformanceCurve curve;
    curve.grid = grid;
    curve.repeats = traces.size();
    curve.space_id = baseline.space_id;

    std::vector<double> base(grid.times_s.size());
    for (std::size_t i = 0; i < base.size(); ++i) base[i] = baseline.value_at(grid.times_s[i]);

    std::vector<NeumaierSum> sums(grid.times_s.size());
    for (const auto& t : traces) {
        const auto best = best_so_far_at(t, grid.times_s);
        for (std::size_t i = 0; i < best.size(); ++i) sums[i].add(best[i].value_or(base[i]));
    }
    curve.values.resize(grid.times_s.size());
    const double n = static_cast<double>(traces.size());
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        curve.values[i] = relative_score(base[i], sums[i].value() / n, baseline.stats.optimum);
    }
    return curve;
}

AggregateScore aggregate_score(std::span<const PerformanceCurve> curves) {
    if (curves.empty()) throw ArgumentError("aggregate score needs at least one curve");
    const std::size_t len = curves.front().values.size();
    for (const auto& c : curves) {
        if (c.values.size() != len) throw ArgumentError("curves have mismatched grid counts");
    }
    AggregateScore out;
    out.curve.resize(len);
    std::vector<double> column(curves.size());
    const double n = static_cast<double>(curves.size());
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t c = 0; c < curves.size(); ++c) column[c] = curves[c].values[i];
        std::sort(column.begin(), column.end());
        NeumaierSum sum;
        for (double v : column) sum.add(v);
        out.curve[i] = sum.value() / n;
    }
    NeumaierSum total;
    for (double v : out.curve) total.add(v);
    out.score = len ? total.value() / static_cast<double>(len) : 0.0;
    for (const auto& c : curves) out.space_ids.push_back(c.space_id);
    std::sort(out.space_ids.begin(), out.space_ids.end());
    return out;
}

void write_baseline_csv(const BaselineCurve& baseline, std::ostream& out) {
    out << "index,time_s,value\n";
    for (std::size_t i = 0; i < baseline.points.size(); ++i) {
        out << i << ',' << format_number(baseline.points[i].time_s) << ','
            << format_number(baseline.points[i].expected_best) << '\n';
    }
}

void write_curve_csv(const PerformanceCurve& curve, std::ostream& out) {
    out << "index,time_s,value\n";
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        out << i << ',' << format_number(curve.grid.times_s[i]) << ','
            << format_number(curve.values[i]) << '\n';
    }
}

}  // namespace metatune
