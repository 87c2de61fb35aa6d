#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "metatune/optimizer_spec.hpp"
#include "metatune/scoring.hpp"
#include "metatune/simrun.hpp"
#include "metatune/space.hpp"

namespace metatune {

/// Ordered (name, values) dimensions of a hyperparameter grid.
using GridDefinition = std::vector<std::pair<std::string, std::vector<HyperValue>>>;

/// Limited grid used for exhaustive tuning.
GridDefinition reference_grid(Algorithm algorithm);

/// Wider grid intended for meta-strategy tuning.
GridDefinition extended_grid(Algorithm algorithm);

/// Parses a grid: either a preset name ("reference", "extended"), an array of
/// {name, values}, or an object {name: [values]} (ordered by the algorithm's
/// conventional parameter order).
GridDefinition parse_grid(Algorithm algorithm, const nlohmann::json& doc);

class HyperSpace {
  public:
    HyperSpace(Algorithm algorithm, GridDefinition dimensions);

    Algorithm algorithm() const noexcept { return algorithm_; }
    const GridDefinition& dimensions() const noexcept { return dimensions_; }
    std::span<const std::size_t> cardinalities() const noexcept { return cardinalities_; }
    std::size_t size() const noexcept { return size_; }

    /// Configuration at a row-major grid index (first dimension varies slowest).
    HyperConfig at(std::size_t index) const;
    OptimizerSpec spec_at(std::size_t index) const;

  private:
    Algorithm algorithm_;
    GridDefinition dimensions_;
    std::vector<std::size_t> cardinalities_;
    std::size_t size_ = 1;
};

/// Cartesian product in declared order. Throws SpecError for unknown or
/// out-of-domain hyperparameters and empty dimensions.
HyperSpace build_hyperspace(Algorithm algorithm, const GridDefinition& grid);

/// A search space with its baseline, budget and sampling grid computed once.
struct PreparedSpace {
    std::string id;
    std::shared_ptr<const SearchSpace> space;
    SpaceStats stats;
    BaselineCurve baseline;
    Budget budget;
    SamplingGrid grid;
};

PreparedSpace prepare_space(std::shared_ptr<const SearchSpace> space, double cutoff_fraction,
                            std::size_t grid_count, std::string id = {});

struct ScoringContext {
    std::vector<PreparedSpace> spaces;
    std::size_t repeats = 25;
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;
    RunOptions run_options;
};

struct SpaceScore {
    std::string space_id;
    double score = 0.0;
};

struct HyperResult {
    HyperConfig hyperconfig;
    double score = 0.0;
    std::vector<SpaceScore> per_space;  // sorted by space id
    std::vector<double> aggregate_curve;
    std::size_t repeats = 0;
    std::size_t grid_index = 0;
    std::size_t evaluation_rank = 0;  // order in which the configuration was scored
};

/// Scores one optimizer configuration on every space of the context. Run seeds
/// derive from (master seed, space id, configuration, repeat).
HyperResult score_hyperconfig(const OptimizerSpec& spec, const ScoringContext& context);

/// The traces score_hyperconfig would produce for one space.
std::vector<RunTrace> run_repeats(const OptimizerSpec& spec, const PreparedSpace& prepared,
                                  const ScoringContext& context);

/// Every configuration scored once, ranked by score (descending; ties keep grid order).
std::vector<HyperResult> exhaustive_tune(const HyperSpace& hyperspace,
                                         const ScoringContext& context);

/// Scores the configuration at a grid index.
using HyperScorer = std::function<HyperResult(std::size_t grid_index)>;

struct MetaResult {
    HyperResult best;
    std::vector<HyperResult> evaluated;  // in evaluation order
    RunTrace trace;                      // the meta-level run, one time unit per evaluation
};

/// Searches the grid with an optimizer as meta-strategy, minimizing -score. At
/// most `meta_budget` distinct configurations are scored.
MetaResult meta_tune(const HyperSpace& hyperspace, const OptimizerSpec& meta,
                     std::size_t meta_budget, const HyperScorer& scorer, std::uint64_t seed);
MetaResult meta_tune(const HyperSpace& hyperspace, const OptimizerSpec& meta,
                     std::size_t meta_budget, const ScoringContext& context);

struct GeneralizationRow {
    std::string space_id;
    bool train = true;
    double best_score = 0.0;
    double reference_score = 0.0;
};

struct GeneralizationReport {
    HyperConfig best;
    HyperConfig reference;
    std::vector<GeneralizationRow> rows;  // train spaces first, then test
    double train_best = 0.0;
    double train_reference = 0.0;
    double test_best = 0.0;
    double test_reference = 0.0;
    /// (best - reference) / |reference|; 0 when the two coincide.
    double train_improvement = 0.0;
    double test_improvement = 0.0;
    std::size_t repeats = 0;
};

GeneralizationReport generalization_report(const HyperConfig& best,
                                           const HyperConfig& reference, Algorithm algorithm,
                                           const ScoringContext& train,
                                           const ScoringContext& test, std::size_t repeats);

/// Index of the result whose score is closest to the mean score (ties: first).
std::size_t closest_to_mean(const std::vector<HyperResult>& results);

double relative_improvement(double best, double reference);

}  // namespace metatune
