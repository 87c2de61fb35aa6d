#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace metatune {

/// A tunable parameter value: a number or a text token.
using ParamValue = std::variant<double, std::string>;

/// Renders a value as it appears in canonical configuration keys
/// (numbers in shortest round-trip decimal form).
std::string render_value(const ParamValue& value);

/// Renders a double in shortest round-trip form ("32", "0.5", "1e-07").
std::string format_number(double value);

struct ParameterDef {
    std::string name;
    std::vector<ParamValue> values;
};

struct SpaceMeta {
    std::string kernel_name;
    std::string device_name;
    std::string input_id;
    std::string objective_units = "seconds";
    bool lower_is_better = true;
    std::string time_units = "seconds";
    std::string provenance;

    /// Identifier used for seed derivation and reports: "kernel@device[@input]".
    std::string id() const;
};

struct ConfigRecord {
    std::optional<double> objective;
    bool invalid = false;
    std::optional<std::string> error_kind;
    double compile_time_s = 0.0;
    std::vector<double> runtimes_s;
    double framework_time_s = 0.0;
    double verification_time_s = 0.0;
};

/// A fully enumerated tuning problem.
///
/// Records are stored densely in row-major order over the parameter value indices
/// (the first parameter varies slowest), so every Cartesian-product configuration
/// has exactly one record. Immutable after construction.
class SearchSpace {
  public:
    /// `records` must hold one record per configuration in row-major order.
    SearchSpace(SpaceMeta meta, std::vector<ParameterDef> parameters,
                std::vector<ConfigRecord> records);

    const SpaceMeta& meta() const noexcept { return meta_; }
    const std::vector<ParameterDef>& parameters() const noexcept { return parameters_; }
    const std::vector<ConfigRecord>& records() const noexcept { return records_; }
    std::span<const std::size_t> cardinalities() const noexcept { return cardinalities_; }

    std::size_t dimensions() const noexcept { return parameters_.size(); }
    std::size_t size() const noexcept { return records_.size(); }
    const ConfigRecord& record(std::size_t flat) const { return records_.at(flat); }

    std::string key(std::size_t flat) const;
    std::optional<std::size_t> find(std::string_view key) const;

    std::size_t flatten(std::span<const std::size_t> indices) const;
    std::vector<std::size_t> unflatten(std::size_t flat) const;
    bool in_range(std::span<const std::size_t> indices) const noexcept;

    /// Objective on a lower-is-better scale (negated for higher-is-better spaces);
    /// empty for invalid records.
    std::optional<double> oriented_objective(std::size_t flat) const;

  private:
    SpaceMeta meta_;
    std::vector<ParameterDef> parameters_;
    std::vector<ConfigRecord> records_;
    std::vector<std::size_t> cardinalities_;
    std::vector<std::size_t> strides_;
    std::vector<std::unordered_map<std::string, std::size_t>> value_lookup_;
};

struct SpaceStats {
    double optimum = 0.0;
    double median_valid = 0.0;
    std::size_t valid_count = 0;
    std::size_t total_count = 0;
    double mean_eval_cost_s = 0.0;
};

/// Objective statistics over valid records; costs over all records.
/// Objective values are on the lower-is-better scale.
SpaceStats space_stats(const SearchSpace& space);

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_space(const SearchSpace& space);

// ---------------------------------------------------------------------------
// Native cache files

/// Reads a native cache file (plain or gzip-compressed JSON).
/// Throws SchemaError for malformed content, ValidationError listing every
/// invariant violation, IoError when the file cannot be read.
SearchSpace load_cache(const std::filesystem::path& path);

/// Parses native cache JSON; same errors as load_cache.
SearchSpace parse_cache(const nlohmann::ordered_json& doc);

/// Checks a cache document without throwing ValidationError: schema problems are
/// still thrown as SchemaError, everything else lands in the report.
ValidationReport validate_cache(const nlohmann::ordered_json& doc);

/// Canonical serialized form; `load` of it re-serializes to the same bytes.
std::string serialize_cache(const SearchSpace& space);

/// Writes the canonical form, gzip-compressed when the path ends in ".gz".
void save_cache(const SearchSpace& space, const std::filesystem::path& path);

/// Reads a whole file, transparently inflating gzip content (detected by magic bytes).
std::string read_file_maybe_gzip(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Import of externally recorded result files

/// Describes where the fields of a foreign result file live.
///
/// Field locations are JSON pointers relative to one entry ("/times/compile");
/// a bare name such as "time" means the top-level member of that name.
struct ImportMapping {
    /// Pointer to the entry collection (an array or an object) in the source.
    std::string records = "/cache";
    /// Pointer, relative to each entry, to the object holding the parameter values.
    /// Empty means the entry itself.
    std::string config = "";
    /// Parameter names in order. When empty, read from `parameter_order`.
    std::vector<std::string> parameters;
    /// Optional document-level pointers to an ordered name list and to a
    /// {name: [values]} object. Without values the distinct observed values are used.
    std::string parameter_order;
    std::string parameter_values;

    std::string objective;  // required
    std::string invalid;    // optional boolean field
    std::string error_kind;  // optional text field
    /// Objective values (as text) that mark the entry invalid, e.g. "InvalidConfig".
    std::vector<std::string> invalid_markers;
    /// Objectives at or above this value are treated as invalid.
    std::optional<double> invalid_threshold;

    std::string compile_time;
    std::string runtimes;
    std::string framework_time;
    std::string verification_time;
    /// Multiplier converting source time fields to seconds (0.001 for milliseconds).
    double time_scale = 1.0;

    /// Document-level pointers or literal overrides for metadata.
    SpaceMeta meta;
    std::string kernel_name_field;
    std::string device_name_field;

    /// Configurations absent from the source become invalid records with
    /// error_kind "not_in_source" instead of raising an ImportError.
    bool fill_missing = false;
};

ImportMapping parse_import_mapping(const nlohmann::json& doc);

SearchSpace import_generic(const std::filesystem::path& path, const ImportMapping& mapping);
SearchSpace import_generic(const nlohmann::json& source, const ImportMapping& mapping,
                           std::string_view source_name);

// ---------------------------------------------------------------------------
// Synthetic spaces

enum class SynthFamily { quadratic, sines, rank };

struct CostModel {
    enum class Kind { constant, lognormal };
    Kind kind = Kind::constant;
    double compile_s = 0.5;
    double runtime_s = 0.1;  // per repeat
    std::size_t repeats = 4;
    double framework_s = 0.1;
    double sigma = 0.5;  // lognormal only; per-config factor has mean 1
};

struct SynthSpec {
    std::vector<std::size_t> cardinalities;
    SynthFamily family = SynthFamily::quadratic;
    double invalid_fraction = 0.0;
    CostModel cost;
};

SynthFamily parse_family(std::string_view name);
std::string_view family_name(SynthFamily family);

/// Deterministic synthetic space for hardware-free experiments.
///
/// Exactly round(invalid_fraction * N) records are invalid (capped so one valid
/// record remains). Parameter p<i> takes the values 1, 2, 4, ... (powers of two).
SearchSpace synth_space(const SynthSpec& spec, std::uint64_t seed);

}  // namespace metatune
