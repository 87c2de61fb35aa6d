#include "metatune/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "metatune/error.hpp"

namespace metatune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_in_range(std::span<const std::size_t> cards, std::span<const std::size_t> iv) {
    if (iv.size() != cards.size()) throw ArgumentError("index vector has the wrong dimension");
    for (std::size_t i = 0; i < iv.size(); ++i) {
        if (iv[i] >= cards[i]) throw ArgumentError("index vector out of range");
    }
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ArgumentError(std::string(what) + ": dimension mismatch");
}

IndexVector random_vector(std::span<const std::size_t> cards, Rng& rng) {
    IndexVector x(cards.size());
    for (std::size_t i = 0; i < cards.size(); ++i) x[i] = rng.uniform_index(cards[i]);
    return x;
}

std::vector<std::size_t> movable_dimensions(std::span<const std::size_t> cards) {
    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < cards.size(); ++i) {
        if (cards[i] > 1) dims.push_back(i);
    }
    return dims;
}

/// Uniform over the hamming neighbors: one movable dimension, a different value.
IndexVector random_hamming_neighbor(std::span<const std::size_t> cards,
                                    const std::vector<std::size_t>& movable,
                                    const IndexVector& x, Rng& rng) {
    IndexVector y = x;
    const auto dim = movable[rng.uniform_index(movable.size())];
    auto v = rng.uniform_index(cards[dim] - 1);
    if (v >= x[dim]) ++v;
    y[dim] = v;
    return y;
}

bool lex_less(const IndexVector& a, const IndexVector& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Moves x/fx in place; RunExhausted propagates to the caller.
void descend(Runner& runner, IndexVector& x, double& fx, LocalSearchMethod method, Rng& rng) {
    const auto cards = runner.cardinalities();
    switch (method) {
        case LocalSearchMethod::greedy: {
            for (;;) {
                auto nbs = neighbors(cards, x, NeighborMode::adjacent);
                std::ptrdiff_t best = -1;
                double best_f = fx;
                for (std::size_t k = 0; k < nbs.size(); ++k) {
                    const double f = runner.evaluate(nbs[k]);
                    if (f < best_f) {
                        best_f = f;
                        best = static_cast<std::ptrdiff_t>(k);
                    }
                }
                if (best < 0) return;
                x = std::move(nbs[static_cast<std::size_t>(best)]);
                fx = best_f;
            }
        }
        case LocalSearchMethod::first_improvement: {
            for (;;) {
                auto nbs = neighbors(cards, x, NeighborMode::adjacent);
                for (std::size_t k = nbs.size(); k > 1; --k) {
                    std::swap(nbs[k - 1], nbs[rng.uniform_index(k)]);
                }
                bool moved = false;
                for (auto& nb : nbs) {
                    const double f = runner.evaluate(nb);
                    if (f < fx) {
                        x = std::move(nb);
                        fx = f;
                        moved = true;
                        break;
                    }
                }
                if (!moved) return;
            }
        }
        case LocalSearchMethod::stochastic_hill: {
            const std::size_t patience = 2 * cards.size();
            std::size_t fails = 0;
            while (fails < patience) {
                auto nbs = neighbors(cards, x, NeighborMode::adjacent);
                if (nbs.empty()) return;
                auto& nb = nbs[rng.uniform_index(nbs.size())];
                const double f = runner.evaluate(nb);
                if (f < fx) {
                    x = std::move(nb);
                    fx = f;
                    fails = 0;
                } else {
                    ++fails;
                }
            }
            return;
        }
    }
}

struct AnnealSettings {
    double t_start;
    double t_min;
    double alpha;
    std::size_t maxiter;
    DeltaMode mode;
};

AnnealSettings anneal_settings(const HyperConfig& hp) {
    return AnnealSettings{
        hp.number("T", 1.0), hp.number("T_min", 0.001), hp.number("alpha", 0.995),
        static_cast<std::size_t>(hp.number("maxiter", 1)),
        hp.text("acceptance", "relative") == "absolute" ? DeltaMode::absolute : DeltaMode::relative};
}

void random_search(Runner& runner, Rng& rng) {
    // Lazy Fisher-Yates: draws without replacement in O(draws) memory.
    const std::size_t n = runner.size();
    std::unordered_map<std::size_t, std::size_t> swapped;
    auto at = [&](std::size_t i) {
        const auto it = swapped.find(i);
        return it == swapped.end() ? i : it->second;
    };
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = k + rng.uniform_index(n - k);
        const std::size_t pick = at(j);
        swapped[j] = at(k);
        runner.evaluate_flat(pick);
    }
}

void simulated_annealing(const HyperConfig& hp, Runner& runner, Rng& rng, OptimizerStats& stats) {
    const auto s = anneal_settings(hp);
    const auto cards = runner.cardinalities();
    const auto movable = movable_dimensions(cards);
    const std::size_t patience = 2 * cards.size();
    for (;;) {
        IndexVector x = random_vector(cards, rng);
        double fx = runner.evaluate(x);
        if (movable.empty()) continue;
        double t = s.t_start;
        while (t > s.t_min) {
            for (std::size_t j = 0; j < s.maxiter; ++j) {
                IndexVector y = random_hamming_neighbor(cards, movable, x, rng);
                const double fy = runner.evaluate(y);
                if (fy <= fx || rng.uniform01() < sa_accept_probability(fx, fy, t, s.mode)) {
                    if (fy > fx) ++stats.accepted_worse;
                    x = std::move(y);
                    fx = fy;
                }
            }
            t = cooling_step(t, s.alpha);
        }
        // Frozen: finish with a stochastic greedy quench, then restart.
        std::size_t fails = 0;
        while (fails < patience) {
            IndexVector y = random_hamming_neighbor(cards, movable, x, rng);
            const double fy = runner.evaluate(y);
            if (fy < fx) {
                x = std::move(y);
                fx = fy;
                fails = 0;
            } else {
                ++fails;
            }
        }
        ++stats.restarts;
    }
}

// Generalised visiting step: the number of resampled dimensions shrinks with
// the temperature, from all of them at the start value down to one.
IndexVector visit(std::span<const std::size_t> cards, std::vector<std::size_t> movable,
                  const IndexVector& x, double temperature_ratio, Rng& rng) {
    const double span = static_cast<double>(movable.size() - 1) * std::clamp(temperature_ratio, 0.0, 1.0);
    const std::size_t m = 1 + static_cast<std::size_t>(std::llround(span));
    IndexVector y = x;
    for (std::size_t k = 0; k < m; ++k) {
        const auto pick = k + rng.uniform_index(movable.size() - k);
        std::swap(movable[k], movable[pick]);
        const auto dim = movable[k];
        auto v = rng.uniform_index(cards[dim] - 1);
        if (v >= x[dim]) ++v;
        y[dim] = v;
    }
    return y;
}

void dual_annealing(const HyperConfig& hp, Runner& runner, Rng& rng, OptimizerStats& stats) {
    const auto s = anneal_settings(hp);
    const auto method = parse_local_search(hp.text("method", "L-BFGS-B"));
    const auto cards = runner.cardinalities();
    const auto movable = movable_dimensions(cards);
    for (;;) {
        IndexVector x = random_vector(cards, rng);
        double fx = runner.evaluate(x);
        if (movable.empty()) continue;
        double t = s.t_start;
        while (t > s.t_min) {
            for (std::size_t j = 0; j < s.maxiter; ++j) {
                IndexVector y = visit(cards, movable, x, t / s.t_start, rng);
                const double fy = runner.evaluate(y);
                if (fy < fx) {
                    x = std::move(y);
                    fx = fy;
                    ++stats.local_searches;
                    descend(runner, x, fx, method, rng);
                } else if (rng.uniform01() < sa_accept_probability(fx, fy, t, s.mode)) {
                    if (fy > fx) ++stats.accepted_worse;
                    x = std::move(y);
                    fx = fy;
                }
            }
            t = cooling_step(t, s.alpha);
        }
        ++stats.restarts;
    }
}

void genetic_algorithm(const HyperConfig& hp, Runner& runner, Rng& rng, OptimizerStats& stats) {
    const auto popsize = static_cast<std::size_t>(hp.number("popsize", 20));
    const auto maxiter = static_cast<std::size_t>(hp.number("maxiter", 100));
    const double mutation_chance = hp.number("mutation_chance", 10);
    const auto method = parse_crossover(hp.text("method", "uniform"));
    const auto cards = runner.cardinalities();

    std::vector<IndexVector> pop(popsize);
    for (auto& ind : pop) ind = random_vector(cards, rng);
    std::vector<double> fit(popsize);

    auto better = [&](std::size_t a, std::size_t b) {
        if (fit[a] != fit[b]) return fit[a] < fit[b];
        if (pop[a] != pop[b]) return lex_less(pop[a], pop[b]);
        return a < b;
    };
    auto tournament = [&] {
        const auto a = rng.uniform_index(popsize);
        const auto b = rng.uniform_index(popsize);
        return better(b, a) ? b : a;
    };

    for (std::size_t gen = 0; gen < maxiter; ++gen) {
        for (std::size_t i = 0; i < popsize; ++i) fit[i] = runner.evaluate(pop[i]);
        ++stats.generations;
        if (gen + 1 == maxiter) break;

        std::size_t elite = 0;
        for (std::size_t i = 1; i < popsize; ++i) {
            if (better(i, elite)) elite = i;
        }
        std::vector<IndexVector> next;
        next.reserve(popsize);
        next.push_back(pop[elite]);
        while (next.size() < popsize) {
            const auto a = tournament();
            const auto b = tournament();
            auto [c1, c2] = crossover(pop[a], pop[b], method, rng);
            next.push_back(mutate(c1, cards, mutation_chance, rng));
            if (next.size() < popsize) next.push_back(mutate(c2, cards, mutation_chance, rng));
        }
        pop = std::move(next);
    }
}

void particle_swarm(const HyperConfig& hp, Runner& runner, Rng& rng) {
    const auto popsize = static_cast<std::size_t>(hp.number("popsize", 20));
    const auto maxiter = static_cast<std::size_t>(hp.number("maxiter", 100));
    const double c1 = hp.number("c1", 2.0);
    const double c2 = hp.number("c2", 1.0);
    const double w = hp.number("w", 0.5);
    const auto cards = runner.cardinalities();
    const std::size_t d = cards.size();

    std::vector<std::vector<double>> x(popsize, std::vector<double>(d));
    std::vector<std::vector<double>> v(popsize, std::vector<double>(d, 0.0));
    for (auto& p : x) {
        for (std::size_t i = 0; i < d; ++i) p[i] = static_cast<double>(rng.uniform_index(cards[i]));
    }
    std::vector<std::vector<double>> pbest = x;
    std::vector<double> pbest_f(popsize, kInf);
    std::vector<double> gbest = x.front();
    double gbest_f = kInf;

    for (std::size_t it = 0; it < maxiter; ++it) {
        for (std::size_t p = 0; p < popsize; ++p) {
            const auto idx = round_position(x[p], cards);
            const double f = runner.evaluate(idx);
            if (f < pbest_f[p]) {
                pbest_f[p] = f;
                pbest[p] = x[p];
            }
            if (f < gbest_f) {
                gbest_f = f;
                gbest = x[p];
            }
        }
        if (it + 1 == maxiter) break;
        for (std::size_t p = 0; p < popsize; ++p) {
            v[p] = pso_velocity_update(v[p], x[p], pbest[p], gbest, w, c1, c2, rng);
            x[p] = pso_position_update(x[p], v[p], cards);
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------

IndexVector encode_config(const SearchSpace& space, std::string_view key) {
    const auto flat = space.find(key);
    if (!flat) throw ArgumentError("configuration '" + std::string(key) + "' is not in the space");
    return space.unflatten(*flat);
}

std::string decode_config(const SearchSpace& space, std::span<const std::size_t> indices) {
    return space.key(space.flatten(indices));
}

std::vector<IndexVector> neighbors(std::span<const std::size_t> cardinalities,
                                   std::span<const std::size_t> indices, NeighborMode mode) {
    require_in_range(cardinalities, indices);
    std::vector<IndexVector> out;
    const IndexVector base(indices.begin(), indices.end());
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (mode == NeighborMode::adjacent) {
            if (base[i] > 0) {
                out.push_back(base);
                --out.back()[i];
            }
            if (base[i] + 1 < cardinalities[i]) {
                out.push_back(base);
                ++out.back()[i];
            }
        } else {
            for (std::size_t j = 0; j < cardinalities[i]; ++j) {
                if (j == base[i]) continue;
                out.push_back(base);
                out.back()[i] = j;
            }
        }
    }
    std::sort(out.begin(), out.end(), lex_less);
    return out;
}

std::vector<IndexVector> neighbors(const SearchSpace& space, std::span<const std::size_t> indices,
                                   NeighborMode mode) {
    return neighbors(space.cardinalities(), indices, mode);
}

double sa_accept_probability(double f_old, double f_new, double temperature, DeltaMode mode) {
    if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
    if (f_new <= f_old) return 1.0;
    if (!std::isfinite(f_new)) return 0.0;
    double delta = f_new - f_old;
    if (mode == DeltaMode::relative) delta /= std::max(std::fabs(f_old), 1e-12);
    return std::exp(-delta / temperature);
}

double cooling_step(double temperature, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("cooling factor alpha must lie in (0, 1)");
    if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
    return alpha * temperature;
}

std::size_t cooling_levels(double temperature, double t_min, double alpha) {
    std::size_t levels = 0;
    while (temperature > t_min) {
        ++levels;
        temperature = cooling_step(temperature, alpha);
    }
    return levels;
}

CrossoverMethod parse_crossover(std::string_view name) {
    if (name == "single_point") return CrossoverMethod::single_point;
    if (name == "two_point") return CrossoverMethod::two_point;
    if (name == "uniform") return CrossoverMethod::uniform;
    if (name == "disruptive_uniform") return CrossoverMethod::disruptive_uniform;
    throw SpecError("unknown crossover method '" + std::string(name) + "'");
}

std::string_view crossover_name(CrossoverMethod method) {
    switch (method) {
        case CrossoverMethod::single_point: return "single_point";
        case CrossoverMethod::two_point: return "two_point";
        case CrossoverMethod::uniform: return "uniform";
        case CrossoverMethod::disruptive_uniform: return "disruptive_uniform";
    }
    return "?";
}

std::pair<IndexVector, IndexVector> single_point_crossover(std::span<const std::size_t> p1,
                                                           std::span<const std::size_t> p2,
                                                           std::size_t cut) {
    require_same_size(p1.size(), p2.size(), "crossover");
    if (cut > p1.size()) throw ArgumentError("crossover cut out of range");
    IndexVector c1(p1.begin(), p1.end()), c2(p2.begin(), p2.end());
    for (std::size_t i = cut; i < c1.size(); ++i) std::swap(c1[i], c2[i]);
    return {std::move(c1), std::move(c2)};
}

std::pair<IndexVector, IndexVector> two_point_crossover(std::span<const std::size_t> p1,
                                                        std::span<const std::size_t> p2,
                                                        std::size_t first, std::size_t second) {
    require_same_size(p1.size(), p2.size(), "crossover");
    if (first > second || second > p1.size()) throw ArgumentError("crossover cuts out of range");
    IndexVector c1(p1.begin(), p1.end()), c2(p2.begin(), p2.end());
    for (std::size_t i = first; i < second; ++i) std::swap(c1[i], c2[i]);
    return {std::move(c1), std::move(c2)};
}

std::pair<IndexVector, IndexVector> crossover(std::span<const std::size_t> p1,
                                              std::span<const std::size_t> p2,
                                              CrossoverMethod method, Rng& rng) {
    require_same_size(p1.size(), p2.size(), "crossover");
    const std::size_t d = p1.size();
    if (d == 0) throw ArgumentError("crossover of empty vectors");
    IndexVector c1(p1.begin(), p1.end()), c2(p2.begin(), p2.end());
    switch (method) {
        case CrossoverMethod::single_point:
            if (d < 2) break;
            return single_point_crossover(p1, p2, 1 + rng.uniform_index(d - 1));
        case CrossoverMethod::two_point: {
            if (d < 2) break;
            if (d == 2) return single_point_crossover(p1, p2, 1);
            std::size_t a = 1 + rng.uniform_index(d - 1);
            std::size_t b = 1 + rng.uniform_index(d - 2);
            if (b >= a) ++b;
            return two_point_crossover(p1, p2, std::min(a, b), std::max(a, b));
        }
        case CrossoverMethod::uniform:
            for (std::size_t i = 0; i < d; ++i) {
                if (rng.uniform01() < 0.5) std::swap(c1[i], c2[i]);
            }
            break;
        case CrossoverMethod::disruptive_uniform: {
            std::vector<std::size_t> differing;
            for (std::size_t i = 0; i < d; ++i) {
                if (p1[i] != p2[i]) differing.push_back(i);
            }
            if (differing.empty()) break;
            std::vector<bool> mask(differing.size());
            bool any = false;
            while (!any) {
                for (std::size_t k = 0; k < differing.size(); ++k) {
                    mask[k] = rng.uniform01() < 0.5;
                    any = any || mask[k];
                }
            }
            for (std::size_t k = 0; k < differing.size(); ++k) {
                if (mask[k]) std::swap(c1[differing[k]], c2[differing[k]]);
            }
            break;
        }
    }
    return {std::move(c1), std::move(c2)};
}

IndexVector mutate(std::span<const std::size_t> indices, std::span<const std::size_t> cardinalities,
                   double mutation_chance, Rng& rng) {
    if (!(mutation_chance >= 1.0)) throw ArgumentError("mutation_chance must be >= 1");
    require_in_range(cardinalities, indices);
    const double p = 1.0 / mutation_chance;
    IndexVector out(indices.begin(), indices.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (rng.uniform01() < p) out[i] = rng.uniform_index(cardinalities[i]);
    }
    return out;
}

std::vector<double> pso_velocity_update(std::span<const double> velocity,
                                        std::span<const double> position,
                                        std::span<const double> pbest,
                                        std::span<const double> gbest, double w, double c1,
                                        double c2, std::span<const double> r1,
                                        std::span<const double> r2) {
    const std::size_t d = velocity.size();
    if (position.size() != d || pbest.size() != d || gbest.size() != d || r1.size() != d ||
        r2.size() != d) {
        throw ArgumentError("pso velocity update: dimension mismatch");
    }
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = w * velocity[i] + c1 * r1[i] * (pbest[i] - position[i]) +
                 c2 * r2[i] * (gbest[i] - position[i]);
    }
    return out;
}

std::vector<double> pso_velocity_update(std::span<const double> velocity,
                                        std::span<const double> position,
                                        std::span<const double> pbest,
                                        std::span<const double> gbest, double w, double c1,
                                        double c2, Rng& rng) {
    const std::size_t d = velocity.size();
    if (position.size() != d || pbest.size() != d || gbest.size() != d) {
        throw ArgumentError("pso velocity update: dimension mismatch");
    }
    std::vector<double> r1(d), r2(d);
    for (std::size_t i = 0; i < d; ++i) {
        r1[i] = rng.uniform01();
        r2[i] = rng.uniform01();
    }
    return pso_velocity_update(velocity, position, pbest, gbest, w, c1, c2, r1, r2);
}

std::vector<double> pso_position_update(std::span<const double> position,
                                        std::span<const double> velocity,
                                        std::span<const std::size_t> cardinalities) {
    const std::size_t d = position.size();
    if (velocity.size() != d || cardinalities.size() != d) {
        throw ArgumentError("pso position update: dimension mismatch");
    }
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double hi = static_cast<double>(cardinalities[i] - 1);
        const double next = position[i] + velocity[i];
        out[i] = std::isnan(next) ? 0.0 : std::clamp(next, 0.0, hi);
    }
    return out;
}

IndexVector round_position(std::span<const double> position,
                           std::span<const std::size_t> cardinalities) {
    require_same_size(position.size(), cardinalities.size(), "round_position");
    IndexVector out(position.size());
    for (std::size_t i = 0; i < position.size(); ++i) {
        const double hi = static_cast<double>(cardinalities[i] - 1);
        out[i] = static_cast<std::size_t>(std::llround(std::clamp(position[i], 0.0, hi)));
    }
    return out;
}

LocalSearchMethod parse_local_search(std::string_view name) {
    if (name == "greedy") return LocalSearchMethod::greedy;
    if (name == "first_improvement") return LocalSearchMethod::first_improvement;
    if (name == "stochastic_hill") return LocalSearchMethod::stochastic_hill;
    // Continuous minimizer names: gradient-type methods descend steepest, the
    // coordinate-direction method scans, the sampling methods walk randomly.
    if (name == "L-BFGS-B" || name == "BFGS" || name == "CG" || name == "SLSQP" ||
        name == "trust-constr") {
        return LocalSearchMethod::greedy;
    }
    if (name == "Powell") return LocalSearchMethod::first_improvement;
    if (name == "COBYLA" || name == "Nelder-Mead") return LocalSearchMethod::stochastic_hill;
    throw SpecError("unknown local search method '" + std::string(name) + "'");
}

std::string_view local_search_name(LocalSearchMethod method) {
    switch (method) {
        case LocalSearchMethod::greedy: return "greedy";
        case LocalSearchMethod::first_improvement: return "first_improvement";
        case LocalSearchMethod::stochastic_hill: return "stochastic_hill";
    }
    return "?";
}

IndexVector local_search(Runner& runner, std::span<const std::size_t> start,
                         LocalSearchMethod method, Rng& rng) {
    require_in_range(runner.cardinalities(), start);
    IndexVector x(start.begin(), start.end());
    try {
        double fx = runner.evaluate(x);
        descend(runner, x, fx, method, rng);
    } catch (const RunExhausted&) {
    }
    return x;
}

void run_optimizer(const OptimizerSpec& spec, Runner& runner, Rng& rng, OptimizerStats* stats) {
    validate_spec(spec);
    OptimizerStats local;
    OptimizerStats& st = stats ? *stats : local;
    try {
        switch (spec.algorithm) {
            case Algorithm::random_search: random_search(runner, rng); break;
            case Algorithm::simulated_annealing: simulated_annealing(spec.hyperparameters, runner, rng, st); break;
            case Algorithm::dual_annealing: dual_annealing(spec.hyperparameters, runner, rng, st); break;
            case Algorithm::genetic_algorithm: genetic_algorithm(spec.hyperparameters, runner, rng, st); break;
            case Algorithm::pso: particle_swarm(spec.hyperparameters, runner, rng); break;
        }
    } catch (const RunExhausted&) {
    }
    st.proposals = runner.events().size();
}

}  // namespace metatune
