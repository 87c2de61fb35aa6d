#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "metatune/space.hpp"

namespace metatune::testing_support {

/// One parameter "x" with values 0..n-1; record i has objectives[i] (empty = invalid)
/// and costs compile_time_s = cost (same for valid and invalid records).
inline SearchSpace line_space(const std::vector<std::optional<double>>& objectives,
                              double cost = 1.0, std::string input = "line") {
    ParameterDef p{"x", {}};
    std::vector<ConfigRecord> records;
    for (std::size_t i = 0; i < objectives.size(); ++i) {
        p.values.emplace_back(static_cast<double>(i));
        ConfigRecord r;
        r.compile_time_s = cost;
        if (objectives[i]) {
            r.objective = objectives[i];
        } else {
            r.invalid = true;
            r.error_kind = "test";
        }
        records.push_back(r);
    }
    SpaceMeta meta;
    meta.kernel_name = "kernel";
    meta.device_name = "device";
    meta.input_id = std::move(input);
    return SearchSpace(meta, {p}, std::move(records));
}

inline SearchSpace line_space(const std::vector<double>& objectives, double cost = 1.0,
                              std::string input = "line") {
    std::vector<std::optional<double>> o(objectives.begin(), objectives.end());
    return line_space(o, cost, std::move(input));
}

/// Grid with numeric parameters p0.. of the given cardinalities; objective(flat)
/// empty means invalid; every record costs `cost` seconds.
inline SearchSpace grid_space(const std::vector<std::size_t>& cards,
                              const std::function<std::optional<double>(std::size_t)>& objective,
                              double cost = 1.0, std::string input = "grid") {
    std::vector<ParameterDef> params;
    std::size_t total = 1;
    for (std::size_t i = 0; i < cards.size(); ++i) {
        ParameterDef p{"p" + std::to_string(i), {}};
        for (std::size_t j = 0; j < cards[i]; ++j) p.values.emplace_back(static_cast<double>(j));
        params.push_back(p);
        total *= cards[i];
    }
    std::vector<ConfigRecord> records(total);
    for (std::size_t f = 0; f < total; ++f) {
        records[f].compile_time_s = cost;
        if (auto v = objective(f)) {
            records[f].objective = v;
        } else {
            records[f].invalid = true;
        }
    }
    SpaceMeta meta;
    meta.kernel_name = "kernel";
    meta.device_name = "device";
    meta.input_id = std::move(input);
    return SearchSpace(meta, std::move(params), std::move(records));
}

/// Same parameters and costs, objectives mapped through fn.
inline SearchSpace transform_space(const SearchSpace& space, const std::function<double(double)>& fn) {
    auto records = space.records();
    for (auto& r : records) {
        if (r.objective) r.objective = fn(*r.objective);
    }
    return SearchSpace(space.meta(), space.parameters(), std::move(records));
}

}  // namespace metatune::testing_support
