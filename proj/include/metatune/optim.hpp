#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metatune/optimizer_spec.hpp"
#include "metatune/rng.hpp"
#include "metatune/simrun.hpp"
#include "metatune/space.hpp"

namespace metatune {

/// One value index per parameter.
using IndexVector = std::vector<std::size_t>;

IndexVector encode_config(const SearchSpace& space, std::string_view key);
std::string decode_config(const SearchSpace& space, std::span<const std::size_t> indices);

enum class NeighborMode { adjacent, hamming };

/// Neighbors in lexicographic order. Boundaries do not wrap.
std::vector<IndexVector> neighbors(std::span<const std::size_t> cardinalities,
                                   std::span<const std::size_t> indices, NeighborMode mode);
std::vector<IndexVector> neighbors(const SearchSpace& space,
                                   std::span<const std::size_t> indices, NeighborMode mode);

// ---------------------------------------------------------------------------
// Annealing

enum class DeltaMode { relative, absolute };

/// Metropolis acceptance. Improvements (and ties) are always accepted; a worse
/// value is accepted with exp(-delta / T), where delta is the increase relative
/// to |f_old| (or the plain increase in absolute mode).
double sa_accept_probability(double f_old, double f_new, double temperature,
                             DeltaMode mode = DeltaMode::relative);

double cooling_step(double temperature, double alpha);

/// Number of temperature levels the annealing loop runs before the temperature
/// falls below t_min.
std::size_t cooling_levels(double temperature, double t_min, double alpha);

// ---------------------------------------------------------------------------
// Genetic operators

enum class CrossoverMethod { single_point, two_point, uniform, disruptive_uniform };

CrossoverMethod parse_crossover(std::string_view name);
std::string_view crossover_name(CrossoverMethod method);

std::pair<IndexVector, IndexVector> crossover(std::span<const std::size_t> p1,
                                              std::span<const std::size_t> p2,
                                              CrossoverMethod method, Rng& rng);

/// Children swap suffixes starting at `cut`.
std::pair<IndexVector, IndexVector> single_point_crossover(std::span<const std::size_t> p1,
                                                           std::span<const std::size_t> p2,
                                                           std::size_t cut);

/// Children swap the segment [first, second).
std::pair<IndexVector, IndexVector> two_point_crossover(std::span<const std::size_t> p1,
                                                        std::span<const std::size_t> p2,
                                                        std::size_t first, std::size_t second);

/// Each gene is resampled uniformly in range with probability 1/mutation_chance.
IndexVector mutate(std::span<const std::size_t> indices,
                   std::span<const std::size_t> cardinalities, double mutation_chance,
                   Rng& rng);

// ---------------------------------------------------------------------------
// Particle swarm

/// v' = w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x) with r1, r2 drawn per dimension.
std::vector<double> pso_velocity_update(std::span<const double> velocity,
                                        std::span<const double> position,
                                        std::span<const double> pbest,
                                        std::span<const double> gbest, double w, double c1,
                                        double c2, Rng& rng);

/// Same rule with explicit random factors.
std::vector<double> pso_velocity_update(std::span<const double> velocity,
                                        std::span<const double> position,
                                        std::span<const double> pbest,
                                        std::span<const double> gbest, double w, double c1,
                                        double c2, std::span<const double> r1,
                                        std::span<const double> r2);

/// x + v clamped to [0, cardinality - 1] per dimension.
std::vector<double> pso_position_update(std::span<const double> position,
                                        std::span<const double> velocity,
                                        std::span<const std::size_t> cardinalities);

/// Nearest in-range index vector of a continuous position.
IndexVector round_position(std::span<const double> position,
                           std::span<const std::size_t> cardinalities);

// ---------------------------------------------------------------------------
// Local search

enum class LocalSearchMethod { greedy, first_improvement, stochastic_hill };

/// Resolves a dual annealing "method" value. The continuous minimizer names from
/// the reference grid map onto the discrete local searches.
LocalSearchMethod parse_local_search(std::string_view name);
std::string_view local_search_name(LocalSearchMethod method);

/// Descends over adjacent neighbors until no strict improvement is found, or the
/// runner runs out of budget. Returns the final position.
IndexVector local_search(Runner& runner, std::span<const std::size_t> start,
                         LocalSearchMethod method, Rng& rng);

// ---------------------------------------------------------------------------
// Optimizer driver

/// Counters collected while an optimizer runs.
struct OptimizerStats {
    std::size_t proposals = 0;
    std::size_t accepted_worse = 0;
    std::size_t restarts = 0;
    std::size_t generations = 0;
    std::size_t local_searches = 0;
};

/// Runs the algorithm until it finishes or the runner's budget is spent.
void run_optimizer(const OptimizerSpec& spec, Runner& runner, Rng& rng,
                   OptimizerStats* stats = nullptr);

}  // namespace metatune
