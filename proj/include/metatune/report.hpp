#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metatune/hypertune.hpp"

namespace metatune {

inline constexpr const char* kVersion = "0.1.0";

/// Parsed experiment definition with cache paths already resolved.
struct ExperimentConfig {
    enum class Mode { exhaustive, meta };

    Algorithm algorithm = Algorithm::genetic_algorithm;
    GridDefinition grid;
    std::string grid_label;  // preset name, or "custom"
    std::vector<std::filesystem::path> train_spaces;
    std::vector<std::filesystem::path> test_spaces;
    std::size_t repeats = 25;
    std::size_t validation_repeats = 100;
    double cutoff_fraction = 0.95;
    std::size_t grid_count = 50;
    std::uint64_t master_seed = 0;
    Mode mode = Mode::exhaustive;
    OptimizerSpec meta{Algorithm::genetic_algorithm, {}};
    std::size_t meta_budget = 0;
};

/// Finds a cache file: as given, then relative to `base_dir`, then under
/// $METATUNE_CACHE_DIR. Throws IoError when none exists.
std::filesystem::path resolve_cache_path(const std::string& name,
                                         const std::filesystem::path& base_dir = {});

ExperimentConfig parse_experiment(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Runs the experiment and returns the results document.
nlohmann::ordered_json run_experiment(const ExperimentConfig& config, std::size_t jobs);

nlohmann::ordered_json hyper_result_to_json(const HyperResult& result, std::size_t rank);
nlohmann::ordered_json generalization_to_json(const GeneralizationReport& report);

enum class ReportKind { aggregate_curve, heatmap, ranking };
enum class ReportFormat { csv, json };

ReportKind parse_report_kind(std::string_view name);
ReportFormat parse_report_format(std::string_view name);

/// Writes report files for a results document into `out_dir`; returns their paths.
/// Throws ArgumentError for documents without results.
std::vector<std::filesystem::path> emit_report(const nlohmann::ordered_json& results, ReportKind kind,
                                               ReportFormat format,
                                               const std::filesystem::path& out_dir);

/// Writes text to a file, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace metatune
