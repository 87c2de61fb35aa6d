#include <cmath>
#include <numbers>
#include <numeric>

#include "metatune/error.hpp"
#include "metatune/rng.hpp"
#include "metatune/space.hpp"

namespace metatune {

SynthFamily parse_family(std::string_view name) {
    if (name == "quadratic") return SynthFamily::quadratic;
    if (name == "sines") return SynthFamily::sines;
    if (name == "rank") return SynthFamily::rank;
    throw SpecError("unknown synthetic family '" + std::string(name) +
                    "' (expected quadratic, sines or rank)");
}

std::string_view family_name(SynthFamily family) {
    switch (family) {
        case SynthFamily::quadratic: return "quadratic";
        case SynthFamily::sines: return "sines";
        case SynthFamily::rank: return "rank";
    }
    return "?";
}

SearchSpace synth_space(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.cardinalities.empty()) throw SpecError("synthetic space needs at least one parameter");
    for (auto c : spec.cardinalities) {
        if (c == 0) throw SpecError("synthetic parameter cardinalities must be positive");
    }
    if (!(spec.invalid_fraction >= 0.0 && spec.invalid_fraction < 1.0)) {
        throw SpecError("invalid fraction must lie in [0, 1)");
    }
    if (spec.cost.compile_s < 0 || spec.cost.runtime_s < 0 || spec.cost.framework_s < 0 ||
        spec.cost.sigma < 0) {
        throw SpecError("cost model segments must be nonnegative");
    }

    Rng rng(seed);
    const std::size_t d = spec.cardinalities.size();

    std::vector<ParameterDef> params(d);
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) {
        params[i].name = "p" + std::to_string(i);
        for (std::size_t j = 0; j < spec.cardinalities[i]; ++j) {
            params[i].values.emplace_back(std::ldexp(1.0, static_cast<int>(j)));
        }
        total *= spec.cardinalities[i];
    }

    std::vector<double> center(d), weight(d), amplitude(d), omega(d), phase(d);
    for (std::size_t i = 0; i < d; ++i) {
        center[i] = static_cast<double>(rng.uniform_index(spec.cardinalities[i]));
        weight[i] = 0.5 + 1.5 * rng.uniform01();
        amplitude[i] = 0.5 + rng.uniform01();
        omega[i] = 0.8 + 1.7 * rng.uniform01();
        phase[i] = 2.0 * std::numbers::pi * rng.uniform01();
    }

    // Invalid set: a seeded partial shuffle picks exactly n_invalid configurations.
    std::size_t n_invalid =
        static_cast<std::size_t>(std::llround(spec.invalid_fraction * static_cast<double>(total)));
    n_invalid = std::min(n_invalid, total - 1);
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < n_invalid; ++k) {
        const auto j = k + rng.uniform_index(total - k);
        std::swap(order[k], order[j]);
    }
    std::vector<bool> invalid(total, false);
    for (std::size_t k = 0; k < n_invalid; ++k) invalid[order[k]] = true;

    std::vector<double> objective(total, 0.0);
    if (spec.family == SynthFamily::rank) {
        std::vector<std::size_t> valid;
        for (std::size_t f = 0; f < total; ++f) {
            if (!invalid[f]) valid.push_back(f);
        }
        for (std::size_t k = valid.size(); k > 1; --k) {
            std::swap(valid[k - 1], valid[rng.uniform_index(k)]);
        }
        for (std::size_t r = 0; r < valid.size(); ++r) objective[valid[r]] = static_cast<double>(r + 1);
    } else {
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t f = 0; f < total; ++f) {
            double v = 1.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double x = static_cast<double>(idx[i]);
                const double q = weight[i] * (x - center[i]) * (x - center[i]);
                if (spec.family == SynthFamily::quadratic) {
                    v += q;
                } else {
                    v += amplitude[i] * (1.0 + std::sin(omega[i] * x + phase[i])) + 0.1 * q;
                }
            }
            objective[f] = v;
            for (std::size_t i = d; i-- > 0;) {
                if (++idx[i] < spec.cardinalities[i]) break;
                idx[i] = 0;
            }
        }
    }

    std::vector<ConfigRecord> records(total);
    const auto& cost = spec.cost;
    for (std::size_t f = 0; f < total; ++f) {
        double factor = 1.0;
        if (cost.kind == CostModel::Kind::lognormal) {
            factor = std::exp(cost.sigma * rng.normal() - 0.5 * cost.sigma * cost.sigma);
        }
        auto& r = records[f];
        r.compile_time_s = cost.compile_s * factor;
        r.framework_time_s = cost.framework_s * factor;
        if (invalid[f]) {
            r.invalid = true;
            r.error_kind = "synthetic_invalid";
        } else {
            r.objective = objective[f];
            r.runtimes_s.assign(cost.repeats, cost.runtime_s * factor);
        }
    }

    SpaceMeta meta;
    meta.kernel_name = "synthetic_" + std::string(family_name(spec.family));
    meta.device_name = "simulated";
    std::string dims;
    for (std::size_t i = 0; i < d; ++i) {
        dims += (i ? "x" : "") + std::to_string(spec.cardinalities[i]);
    }
    meta.input_id = dims + "_seed" + std::to_string(seed);
    if (n_invalid > 0) meta.input_id += "_inv" + format_number(spec.invalid_fraction);
    meta.provenance = "synthetic";
    return SearchSpace(std::move(meta), std::move(params), std::move(records));
}

}  // namespace metatune
