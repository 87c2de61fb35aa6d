#include <algorithm>
#include <cmath>
#include <map>

#include "metatune/error.hpp"
#include "metatune/space.hpp"

namespace metatune {

namespace {

using json = nlohmann::json;

const json* locate(const json& entry, const std::string& field) {
    if (field.empty()) return nullptr;
    if (field.front() == '/') {
        const json::json_pointer ptr(field);
        if (!entry.contains(ptr)) return nullptr;
        return &entry.at(ptr);
    }
    if (!entry.is_object()) return nullptr;
    const auto it = entry.find(field);
    return it == entry.end() ? nullptr : &*it;
}

const json& locate_document(const json& doc, const std::string& pointer, const char* what) {
    if (pointer.empty()) return doc;
    const json* found = nullptr;
    try {
        found = locate(doc, pointer.front() == '/' ? pointer : "/" + pointer);
    } catch (const json::exception&) {
    }
    if (!found) throw ImportError(std::string("source has no ") + what + " at '" + pointer + "'");
    return *found;
}

double time_field(const json& entry, const std::string& field, double scale,
                  const std::string& where) {
    const json* v = locate(entry, field);
    if (!v || v->is_null()) return 0.0;
    if (!v->is_number()) throw ImportError(where + ": time field '" + field + "' is not a number");
    return v->get<double>() * scale;
}

std::string opt_string(const json& doc, const char* name) {
    const auto it = doc.find(name);
    if (it == doc.end() || it->is_null()) return {};
    return it->get<std::string>();
}

}  // namespace

ImportMapping parse_import_mapping(const json& doc) {
    if (!doc.is_object()) throw ImportError("import mapping must be a JSON object");
    ImportMapping m;
    try {
        if (doc.contains("records")) m.records = doc.at("records").get<std::string>();
        m.config = opt_string(doc, "config");
        if (doc.contains("parameters")) m.parameters = doc.at("parameters").get<std::vector<std::string>>();
        m.parameter_order = opt_string(doc, "parameter_order");
        m.parameter_values = opt_string(doc, "parameter_values");
        m.objective = opt_string(doc, "objective");
        m.invalid = opt_string(doc, "invalid");
        m.error_kind = opt_string(doc, "error_kind");
        if (doc.contains("invalid_markers")) m.invalid_markers = doc.at("invalid_markers").get<std::vector<std::string>>();
        if (doc.contains("invalid_threshold")) m.invalid_threshold = doc.at("invalid_threshold").get<double>();
        m.compile_time = opt_string(doc, "compile_time");
        m.runtimes = opt_string(doc, "runtimes");
        m.framework_time = opt_string(doc, "framework_time");
        m.verification_time = opt_string(doc, "verification_time");
        if (doc.contains("time_scale")) m.time_scale = doc.at("time_scale").get<double>();
        if (doc.contains("fill_missing")) m.fill_missing = doc.at("fill_missing").get<bool>();
        m.kernel_name_field = opt_string(doc, "kernel_name_field");
        m.device_name_field = opt_string(doc, "device_name_field");
        if (const auto it = doc.find("metadata"); it != doc.end()) {
            m.meta.kernel_name = opt_string(*it, "kernel_name");
            m.meta.device_name = opt_string(*it, "device_name");
            m.meta.input_id = opt_string(*it, "input_id");
            if (it->contains("objective_units")) m.meta.objective_units = it->at("objective_units").get<std::string>();
            if (it->contains("lower_is_better")) m.meta.lower_is_better = it->at("lower_is_better").get<bool>();
        }
    } catch (const json::exception& e) {
        throw ImportError(std::string("import mapping: ") + e.what());
    }
    return m;
}

SearchSpace import_generic(const std::filesystem::path& path, const ImportMapping& mapping) {
    const std::string text = read_file_maybe_gzip(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ImportError(path.string() + ": not valid JSON: " + e.what());
    }
    return import_generic(doc, mapping, path.filename().string());
}

SearchSpace import_generic(const json& source, const ImportMapping& mapping,
                           std::string_view source_name) {
    if (mapping.objective.empty()) throw ImportError("mapping lacks the required field 'objective'");

    std::vector<std::string> names = mapping.parameters;
    if (names.empty() && !mapping.parameter_order.empty()) {
        const auto& order = locate_document(source, mapping.parameter_order, "parameter order");
        if (!order.is_array()) throw ImportError("parameter order must be an array of names");
        for (const auto& n : order) names.push_back(n.get<std::string>());
    }
    if (names.empty()) throw ImportError("mapping lacks the required field 'parameters'");

    const auto& collection = locate_document(source, mapping.records, "record collection");
    std::vector<const json*> entries;
    if (collection.is_array()) {
        for (const auto& e : collection) entries.push_back(&e);
    } else if (collection.is_object()) {
        for (const auto& [k, e] : collection.items()) entries.push_back(&e);
    } else {
        throw ImportError("record collection must be an array or an object");
    }

    // Per-entry parameter values.
    std::vector<std::vector<ParamValue>> configs(entries.size(), std::vector<ParamValue>(names.size()));
    for (std::size_t e = 0; e < entries.size(); ++e) {
        const json* cfg = mapping.config.empty() ? entries[e] : locate(*entries[e], mapping.config);
        if (!cfg || !cfg->is_object()) {
            throw ImportError("entry " + std::to_string(e) + ": no configuration object");
        }
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto it = cfg->find(names[i]);
            if (it == cfg->end()) {
                throw ImportError("entry " + std::to_string(e) + ": missing parameter '" + names[i] + "'");
            }
            if (it->is_number()) {
                configs[e][i] = it->get<double>();
            } else if (it->is_string()) {
                configs[e][i] = it->get<std::string>();
            } else {
                throw ImportError("entry " + std::to_string(e) + ": parameter '" + names[i] +
                                  "' is neither number nor string");
            }
        }
    }

    std::vector<ParameterDef> params(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        params[i].name = names[i];
        if (!mapping.parameter_values.empty()) {
            const auto& all = locate_document(source, mapping.parameter_values, "parameter values");
            const auto it = all.find(names[i]);
            if (it == all.end() || !it->is_array()) {
                throw ImportError("parameter values lack '" + names[i] + "'");
            }
            for (const auto& v : *it) {
                if (v.is_number()) params[i].values.emplace_back(v.get<double>());
                else params[i].values.emplace_back(v.get<std::string>());
            }
        } else {
            for (const auto& c : configs) {
                if (std::find(params[i].values.begin(), params[i].values.end(), c[i]) ==
                    params[i].values.end()) {
                    params[i].values.push_back(c[i]);
                }
            }
        }
        const bool numeric = std::all_of(params[i].values.begin(), params[i].values.end(),
                                         [](const ParamValue& v) { return std::holds_alternative<double>(v); });
        if (numeric) {
            std::sort(params[i].values.begin(), params[i].values.end(),
                      [](const ParamValue& a, const ParamValue& b) {
                          return std::get<double>(a) < std::get<double>(b);
                      });
        }
    }

    std::vector<std::map<std::string, std::size_t>> lookup(names.size());
    std::size_t total = 1;
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = 0; j < params[i].values.size(); ++j) {
            lookup[i].emplace(render_value(params[i].values[j]), j);
        }
        total *= params[i].values.size();
    }

    std::vector<ConfigRecord> records(total);
    std::vector<std::ptrdiff_t> owner(total, -1);
    const double scale = mapping.time_scale;

    for (std::size_t e = 0; e < entries.size(); ++e) {
        const json& entry = *entries[e];
        std::size_t flat = 0;
        std::string key;
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto r = render_value(configs[e][i]);
            const auto it = lookup[i].find(r);
            if (it == lookup[i].end()) {
                throw ImportError("entry " + std::to_string(e) + ": value '" + r +
                                  "' not among the declared values of '" + names[i] + "'");
            }
            flat = flat * params[i].values.size() + it->second;
            key += (i ? "," : "") + r;
        }
        if (owner[flat] >= 0) {
            throw ImportError("duplicate configuration '" + key + "' (entries " +
                              std::to_string(owner[flat]) + " and " + std::to_string(e) + ")");
        }
        owner[flat] = static_cast<std::ptrdiff_t>(e);
        const std::string where = "entry " + std::to_string(e) + " ('" + key + "')";

        ConfigRecord rec;
        const json* obj = locate(entry, mapping.objective);
        if (!obj) throw ImportError(where + ": objective field '" + mapping.objective + "' missing");
        if (obj->is_number()) {
            rec.objective = obj->get<double>();
            if (mapping.invalid_threshold && *rec.objective >= *mapping.invalid_threshold) {
                rec.invalid = true;
                rec.error_kind = "objective_above_threshold";
            }
        } else if (obj->is_string()) {
            const auto marker = obj->get<std::string>();
            if (!mapping.invalid_markers.empty() &&
                std::find(mapping.invalid_markers.begin(), mapping.invalid_markers.end(), marker) ==
                    mapping.invalid_markers.end()) {
                throw ImportError(where + ": unrecognised objective value '" + marker + "'");
            }
            rec.invalid = true;
            rec.error_kind = marker;
        } else if (obj->is_null()) {
            rec.invalid = true;
            rec.error_kind = "missing_objective";
        } else {
            throw ImportError(where + ": objective is neither number, string nor null");
        }

        if (const json* inv = locate(entry, mapping.invalid)) {
            if (inv->is_boolean()) {
                if (inv->get<bool>()) rec.invalid = true;
            } else if (inv->is_string()) {
                // Text validity fields (e.g. "correct") mark anything else invalid.
                const auto status = inv->get<std::string>();
                if (status != "correct" && status != "valid") {
                    rec.invalid = true;
                    if (!rec.error_kind) rec.error_kind = status;
                }
            } else {
                throw ImportError(where + ": validity field is neither boolean nor string");
            }
        }
        if (const json* ek = locate(entry, mapping.error_kind); ek && ek->is_string() && rec.invalid) {
            rec.error_kind = ek->get<std::string>();
        }
        if (rec.invalid) rec.objective.reset();

        rec.compile_time_s = time_field(entry, mapping.compile_time, scale, where);
        rec.framework_time_s = time_field(entry, mapping.framework_time, scale, where);
        rec.verification_time_s = time_field(entry, mapping.verification_time, scale, where);
        if (const json* rt = locate(entry, mapping.runtimes); rt && !rt->is_null()) {
            if (rt->is_number()) {
                rec.runtimes_s.push_back(rt->get<double>() * scale);
            } else if (rt->is_array()) {
                for (const auto& t : *rt) {
                    if (!t.is_number()) throw ImportError(where + ": runtimes must be numbers");
                    rec.runtimes_s.push_back(t.get<double>() * scale);
                }
            } else {
                throw ImportError(where + ": runtimes field is neither number nor array");
            }
        }
        if (rec.invalid) rec.runtimes_s.clear();
        records[flat] = std::move(rec);
    }

    for (std::size_t f = 0; f < total; ++f) {
        if (owner[f] >= 0) continue;
        if (!mapping.fill_missing) {
            std::size_t rem = f;
            std::vector<std::string> parts(names.size());
            for (std::size_t i = names.size(); i-- > 0;) {
                parts[i] = render_value(params[i].values[rem % params[i].values.size()]);
                rem /= params[i].values.size();
            }
            std::string key;
            for (std::size_t i = 0; i < parts.size(); ++i) key += (i ? "," : "") + parts[i];
            throw ImportError("configuration '" + key +
                              "' is absent from the source (set fill_missing to record it as invalid)");
        }
        records[f].invalid = true;
        records[f].error_kind = "not_in_source";
    }

    SpaceMeta meta = mapping.meta;
    auto doc_text = [&](const std::string& ptr) -> std::string {
        if (ptr.empty()) return {};
        const json* v = locate(source, ptr.front() == '/' ? ptr : "/" + ptr);
        return v && v->is_string() ? v->get<std::string>() : std::string{};
    };
    if (auto k = doc_text(mapping.kernel_name_field); !k.empty()) meta.kernel_name = k;
    if (auto d = doc_text(mapping.device_name_field); !d.empty()) meta.device_name = d;
    if (meta.kernel_name.empty()) {
        meta.kernel_name = std::filesystem::path(std::string(source_name)).stem().string();
    }
    if (meta.device_name.empty()) meta.device_name = "unknown";
    meta.provenance = "imported from " + std::string(source_name) + " (objective field '" +
                      mapping.objective + "', time scale " + format_number(scale) + ")";

    SearchSpace space(std::move(meta), std::move(params), std::move(records));
    auto report = validate_space(space);
    if (!report.ok()) throw ValidationError(std::move(report.violations));
    return space;
}

}  // namespace metatune
