#include "metatune/report.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "metatune/error.hpp"

namespace metatune {

namespace fs = std::filesystem;

fs::path resolve_cache_path(const std::string& name, const fs::path& base_dir) {
    const fs::path p(name);
    std::vector<fs::path> candidates;
    if (p.is_absolute() || base_dir.empty()) candidates.push_back(p);
    if (p.is_relative() && !base_dir.empty()) candidates.push_back(base_dir / p);
    if (p.is_relative()) {
        if (const char* dir = std::getenv("METATUNE_CACHE_DIR"); dir && *dir) {
            candidates.push_back(fs::path(dir) / p);
        }
    }
    for (const auto& c : candidates) {
        std::error_code ec;
        if (fs::is_regular_file(c, ec)) return c;
    }
    throw IoError("cache file '" + name + "' not found");
}

namespace {

template <typename T>
T get_or(const nlohmann::json& doc, const char* key, T fallback) {
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SpecError(std::string("experiment field '") + key + "' has the wrong type");
    }
}

std::vector<fs::path> space_list(const nlohmann::json& doc, const char* key,
                                 const fs::path& base_dir, bool required) {
    std::vector<fs::path> out;
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) {
        if (required) throw SpecError(std::string("experiment needs '") + key + "'");
        return out;
    }
    if (!it->is_array()) throw SpecError(std::string("experiment field '") + key + "' must be an array");
    for (const auto& name : *it) {
        if (!name.is_string()) throw SpecError(std::string("entries of '") + key + "' must be paths");
        out.push_back(resolve_cache_path(name.get<std::string>(), base_dir));
    }
    return out;
}

std::size_t positive_count(const nlohmann::json& doc, const char* key, std::size_t fallback) {
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return fallback;
    if (!it->is_number_integer() || it->get<long long>() < 1) {
        throw SpecError(std::string("experiment field '") + key + "' must be a positive integer");
    }
    return it->get<std::size_t>();
}

}  // namespace

ExperimentConfig parse_experiment(const nlohmann::json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw SpecError("experiment definition must be a JSON object");
    ExperimentConfig cfg;
    if (!doc.contains("algorithm") || !doc.at("algorithm").is_string()) {
        throw SpecError("experiment needs a string 'algorithm'");
    }
    cfg.algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
    const nlohmann::json grid = doc.contains("grid") ? doc.at("grid") : nlohmann::json("reference");
    cfg.grid = parse_grid(cfg.algorithm, grid);
    cfg.grid_label = grid.is_string() ? grid.get<std::string>() : "custom";
    cfg.train_spaces = space_list(doc, "train_spaces", base_dir, true);
    if (cfg.train_spaces.empty()) throw SpecError("experiment needs at least one training space");
    cfg.test_spaces = space_list(doc, "test_spaces", base_dir, false);
    cfg.repeats = positive_count(doc, "repeats", cfg.repeats);
    cfg.validation_repeats = positive_count(doc, "validation_repeats", cfg.validation_repeats);
    cfg.grid_count = positive_count(doc, "grid_count", cfg.grid_count);
    cfg.cutoff_fraction = get_or<double>(doc, "cutoff_fraction", cfg.cutoff_fraction);
    if (!(cfg.cutoff_fraction > 0.0 && cfg.cutoff_fraction <= 1.0)) {
        throw SpecError("cutoff_fraction must lie in (0, 1]");
    }
    cfg.master_seed = get_or<std::uint64_t>(doc, "master_seed", cfg.master_seed);
    const auto mode = get_or<std::string>(doc, "mode", "exhaustive");
    if (mode == "exhaustive") {
        cfg.mode = ExperimentConfig::Mode::exhaustive;
    } else if (mode == "meta") {
        cfg.mode = ExperimentConfig::Mode::meta;
        if (!doc.contains("meta") || !doc.at("meta").is_object()) {
            throw SpecError("meta mode needs a 'meta' object");
        }
        const auto& meta = doc.at("meta");
        cfg.meta = OptimizerSpec::from_json(meta);
        validate_spec(cfg.meta);
        cfg.meta_budget = positive_count(meta, "budget", 0);
        if (cfg.meta_budget == 0) throw SpecError("meta mode needs a positive 'meta.budget'");
    } else {
        throw SpecError("experiment mode must be 'exhaustive' or 'meta'");
    }
    return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    return parse_experiment(doc, path.parent_path());
}

nlohmann::ordered_json hyper_result_to_json(const HyperResult& result, std::size_t rank) {
    nlohmann::ordered_json j;
    j["rank"] = rank;
    j["grid_index"] = result.grid_index;
    j["evaluation_rank"] = result.evaluation_rank;
    nlohmann::ordered_json hp = nlohmann::ordered_json::object();
    for (const auto& [k, v] : result.hyperconfig.values()) hp[k] = hyper_value_to_json(v);
    j["hyperconfig"] = std::move(hp);
    j["score"] = result.score;
    j["repeats"] = result.repeats;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& s : result.per_space) per[s.space_id] = s.score;
    j["per_space"] = std::move(per);
    j["aggregate_curve"] = result.aggregate_curve;
    return j;
}

nlohmann::ordered_json generalization_to_json(const GeneralizationReport& report) {
    auto hp_json = [](const HyperConfig& h) {
        nlohmann::ordered_json o = nlohmann::ordered_json::object();
        for (const auto& [k, v] : h.values()) o[k] = hyper_value_to_json(v);
        return o;
    };
    nlohmann::ordered_json j;
    j["best"] = hp_json(report.best);
    j["reference"] = hp_json(report.reference);
    j["repeats"] = report.repeats;
    j["train"] = {{"best", report.train_best},
                  {"reference", report.train_reference},
                  {"improvement", report.train_improvement}};
    j["test"] = {{"best", report.test_best},
                 {"reference", report.test_reference},
                 {"improvement", report.test_improvement}};
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["space_id"] = r.space_id;
        row["set"] = r.train ? "train" : "test";
        row["best"] = r.best_score;
        row["reference"] = r.reference_score;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

namespace {

ScoringContext make_context(const std::vector<fs::path>& paths, const ExperimentConfig& cfg,
                            std::size_t jobs, std::size_t repeats) {
    ScoringContext ctx;
    ctx.repeats = repeats;
    ctx.master_seed = cfg.master_seed;
    ctx.jobs = jobs;
    std::set<std::string> ids;
    for (const auto& p : paths) {
        auto space = std::make_shared<const SearchSpace>(load_cache(p));
        ctx.spaces.push_back(prepare_space(space, cfg.cutoff_fraction, cfg.grid_count));
        if (!ids.insert(ctx.spaces.back().id).second) {
            throw SpecError("space " + ctx.spaces.back().id + " is listed twice");
        }
    }
    return ctx;
}

nlohmann::ordered_json space_summary(const ScoringContext& ctx) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& p : ctx.spaces) {
        nlohmann::ordered_json s;
        s["space_id"] = p.id;
        s["configurations"] = p.stats.total_count;
        s["valid"] = p.stats.valid_count;
        s["optimum"] = p.stats.optimum;
        s["median_valid"] = p.stats.median_valid;
        s["mean_eval_cost_s"] = p.stats.mean_eval_cost_s;
        s["threshold_objective"] = p.budget.threshold_objective;
        s["budget_s"] = p.budget.budget_s;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg, std::size_t jobs) {
    const auto hyperspace = build_hyperspace(cfg.algorithm, cfg.grid);
    const auto train = make_context(cfg.train_spaces, cfg, jobs, cfg.repeats);
    const auto test = make_context(cfg.test_spaces, cfg, jobs, cfg.repeats);

    std::vector<HyperResult> ranked;
    nlohmann::ordered_json meta_block;
    if (cfg.mode == ExperimentConfig::Mode::exhaustive) {
        ranked = exhaustive_tune(hyperspace, train);
    } else {
        auto meta = meta_tune(hyperspace, cfg.meta, cfg.meta_budget, train);
        ranked = std::move(meta.evaluated);
        std::stable_sort(ranked.begin(), ranked.end(), [](const HyperResult& a, const HyperResult& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.grid_index < b.grid_index;
        });
        meta_block["optimizer"] = cfg.meta.to_json();
        meta_block["budget"] = cfg.meta_budget;
        meta_block["evaluations"] = ranked.size();
        meta_block["stop_reason"] = stop_reason_name(meta.trace.stop_reason);
    }

    // Reference: the configuration whose score is closest to the mean.
    const auto& best = ranked.front();
    const auto& reference = ranked[closest_to_mean(ranked)];
    const auto report = generalization_report(best.hyperconfig, reference.hyperconfig,
                                              cfg.algorithm, train, test, cfg.validation_repeats);

    nlohmann::ordered_json doc;
    auto& md = doc["metadata"];
    md["tool"] = "metatune";
    md["version"] = kVersion;
    md["algorithm"] = algorithm_name(cfg.algorithm);
    md["mode"] = cfg.mode == ExperimentConfig::Mode::exhaustive ? "exhaustive" : "meta";
    md["grid"] = cfg.grid_label;
    md["grid_size"] = hyperspace.size();
    md["master_seed"] = cfg.master_seed;
    md["repeats"] = cfg.repeats;
    md["validation_repeats"] = cfg.validation_repeats;
    md["cutoff_fraction"] = cfg.cutoff_fraction;
    md["grid_count"] = cfg.grid_count;
    md["baseline"] = "analytic";
    md["time_mapping"] = "draw n at n * mean_eval_cost_s";
    md["train_spaces"] = space_summary(train);
    md["test_spaces"] = space_summary(test);
    if (!meta_block.is_null()) md["meta"] = std::move(meta_block);

    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i) results.push_back(hyper_result_to_json(ranked[i], i + 1));
    doc["results"] = std::move(results);
    doc["reference_grid_index"] = reference.grid_index;
    doc["generalization"] = generalization_to_json(report);
    return doc;
}

ReportKind parse_report_kind(std::string_view name) {
    if (name == "aggregate_curve") return ReportKind::aggregate_curve;
    if (name == "heatmap") return ReportKind::heatmap;
    if (name == "ranking") return ReportKind::ranking;
    throw ArgumentError("unknown report kind '" + std::string(name) +
                        "' (expected aggregate_curve, heatmap or ranking)");
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw ArgumentError("unknown report format '" + std::string(name) + "' (expected csv or json)");
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("cannot write '" + path.string() + "'");
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_value(const nlohmann::ordered_json& v) {
    if (v.is_string()) return csv_field(v.get<std::string>());
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_number(v.get<double>());
    return csv_field(v.dump());
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::vector<fs::path> emit_report(const nlohmann::ordered_json& results, ReportKind kind,
                                  ReportFormat format, const fs::path& out_dir) {
    if (!results.is_object() || !results.contains("results") || !results.at("results").is_array() ||
        results.at("results").empty()) {
        throw ArgumentError("results document has no results");
    }
    const auto& rows = results.at("results");
    const std::string algorithm = results.contains("metadata")
                                      ? results.at("metadata").value("algorithm", "optimizer")
                                      : "optimizer";
    std::vector<fs::path> written;

    switch (kind) {
        case ReportKind::ranking: {
            const fs::path path = out_dir / ("ranking." + std::string(format == ReportFormat::csv ? "csv" : "json"));
            if (format == ReportFormat::json) {
                nlohmann::ordered_json out = nlohmann::ordered_json::array();
                for (const auto& r : rows) {
                    nlohmann::ordered_json o;
                    o["rank"] = r.at("rank");
                    o["grid_index"] = r.at("grid_index");
                    o["evaluation_rank"] = r.at("evaluation_rank");
                    o["score"] = r.at("score");
                    o["hyperconfig"] = r.at("hyperconfig");
                    out.push_back(std::move(o));
                }
                write_text_file(path, dump(out));
            } else {
                std::vector<std::string> names;
                for (const auto& [k, v] : rows.front().at("hyperconfig").items()) names.push_back(k);
                std::ostringstream ss;
                ss << "rank,grid_index,evaluation_rank,score";
                for (const auto& n : names) ss << ',' << csv_field(n);
                ss << '\n';
                for (const auto& r : rows) {
                    ss << csv_value(r.at("rank")) << ',' << csv_value(r.at("grid_index")) << ','
                       << csv_value(r.at("evaluation_rank")) << ',' << csv_value(r.at("score"));
                    const auto& hp = r.at("hyperconfig");
                    for (const auto& n : names) ss << ',' << (hp.contains(n) ? csv_value(hp.at(n)) : "");
                    ss << '\n';
                }
                write_text_file(path, ss.str());
            }
            written.push_back(path);
            break;
        }
        case ReportKind::heatmap: {
            if (!results.contains("generalization")) {
                throw ArgumentError("results document has no generalization block");
            }
            const auto& gen = results.at("generalization");
            const fs::path path = out_dir / ("heatmap." + std::string(format == ReportFormat::csv ? "csv" : "json"));
            if (format == ReportFormat::json) {
                nlohmann::ordered_json out = nlohmann::ordered_json::array();
                for (const char* role : {"best", "reference"}) {
                    for (const auto& row : gen.at("rows")) {
                        nlohmann::ordered_json o;
                        o["hyperconfig"] = role;
                        o["space_id"] = row.at("space_id");
                        o["set"] = row.at("set");
                        o["score"] = row.at(role);
                        out.push_back(std::move(o));
                    }
                }
                write_text_file(path, dump(out));
            } else {
                std::ostringstream ss;
                ss << "hyperconfig,space_id,set,score\n";
                for (const char* role : {"best", "reference"}) {
                    for (const auto& row : gen.at("rows")) {
                        ss << role << ',' << csv_value(row.at("space_id")) << ','
                           << csv_value(row.at("set")) << ',' << csv_value(row.at(role)) << '\n';
                    }
                }
                write_text_file(path, ss.str());
            }
            written.push_back(path);
            break;
        }
        case ReportKind::aggregate_curve: {
            if (format == ReportFormat::json) {
                nlohmann::ordered_json out = nlohmann::ordered_json::array();
                for (const auto& r : rows) {
                    nlohmann::ordered_json o;
                    o["algorithm"] = algorithm;
                    o["grid_index"] = r.at("grid_index");
                    o["hyperconfig"] = r.at("hyperconfig");
                    o["curve"] = r.at("aggregate_curve");
                    out.push_back(std::move(o));
                }
                const fs::path path = out_dir / "aggregate_curves.json";
                write_text_file(path, dump(out));
                written.push_back(path);
            } else {
                for (const auto& r : rows) {
                    const auto& curve = r.at("aggregate_curve");
                    std::ostringstream ss;
                    ss << "index,time_fraction,value\n";
                    const std::size_t n = curve.size();
                    for (std::size_t i = 0; i < n; ++i) {
                        ss << i << ','
                           << format_number(static_cast<double>(i + 1) / static_cast<double>(n)) << ','
                           << csv_value(curve.at(i)) << '\n';
                    }
                    const fs::path path =
                        out_dir / ("aggregate_curve_" + algorithm + "_" +
                                   std::to_string(r.at("grid_index").get<std::size_t>()) + ".csv");
                    write_text_file(path, ss.str());
                    written.push_back(path);
                }
            }
            break;
        }
    }
    return written;
}

}  // namespace metatune
