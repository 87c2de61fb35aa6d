#include "metatune/space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <zlib.h>

#include "metatune/error.hpp"
#include "metatune/simrun.hpp"

namespace metatune {

namespace {

using ojson = nlohmann::ordered_json;

bool is_numeric(const ParamValue& v) { return std::holds_alternative<double>(v); }

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(text.substr(start));
            return out;
        }
        out.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

// Checks shared by parsed cache documents and constructed spaces.
void check_definition(const SpaceMeta& meta, const std::vector<ParameterDef>& params,
                      std::vector<std::string>& out) {
    if (meta.kernel_name.empty()) out.push_back("metadata: kernel_name is empty");
    if (meta.device_name.empty()) out.push_back("metadata: device_name is empty");
    if (params.empty()) out.push_back("parameters: no parameters defined");

    std::set<std::string> names;
    for (const auto& p : params) {
        if (!names.insert(p.name).second) {
            out.push_back("parameter '" + p.name + "': duplicate name");
        }
        if (p.values.empty()) {
            out.push_back("parameter '" + p.name + "': no values");
            continue;
        }
        std::set<std::string> rendered;
        bool all_numeric = true;
        for (const auto& v : p.values) {
            const auto r = render_value(v);
            if (!rendered.insert(r).second) {
                out.push_back("parameter '" + p.name + "': duplicate value '" + r + "'");
            }
            if (!is_numeric(v)) {
                all_numeric = false;
                if (r.find(',') != std::string::npos) {
                    out.push_back("parameter '" + p.name + "': value '" + r +
                                  "' contains the key separator ','");
                }
            } else if (!std::isfinite(std::get<double>(v))) {
                out.push_back("parameter '" + p.name + "': non-finite value");
            }
        }
        if (all_numeric) {
            for (std::size_t i = 1; i < p.values.size(); ++i) {
                if (!(std::get<double>(p.values[i - 1]) < std::get<double>(p.values[i]))) {
                    out.push_back("parameter '" + p.name +
                                  "': numeric values are not in ascending order");
                    break;
                }
            }
        }
    }
}

void check_record(const std::string& key, const ConfigRecord& r, std::vector<std::string>& out) {
    const std::string where = "record '" + key + "': ";
    if (!r.invalid) {
        if (!r.objective) {
            out.push_back(where + "valid record has no objective");
        } else if (!std::isfinite(*r.objective)) {
            out.push_back(where + "valid record has a non-finite objective");
        }
    } else if (r.objective) {
        out.push_back(where + "invalid record carries an objective");
    }
    if (!finite_nonnegative(r.compile_time_s)) out.push_back(where + "compile_time_s is negative or non-finite");
    if (!finite_nonnegative(r.framework_time_s)) out.push_back(where + "framework_time_s is negative or non-finite");
    if (!finite_nonnegative(r.verification_time_s)) out.push_back(where + "verification_time_s is negative or non-finite");
    for (double t : r.runtimes_s) {
        if (!finite_nonnegative(t)) {
            out.push_back(where + "runtimes_s holds a negative or non-finite value");
            break;
        }
    }
}

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
    throw SchemaError("cache schema: " + path + ": " + what);
}

std::string require_string(const ojson& obj, const char* name, const std::string& path,
                           bool required = true) {
    const auto it = obj.find(name);
    if (it == obj.end()) {
        if (required) schema_fail(path + "/" + name, "missing");
        return {};
    }
    if (!it->is_string()) schema_fail(path + "/" + name, "expected a string");
    return it->get<std::string>();
}

double read_time(const ojson& rec, const char* name, const std::string& path) {
    const auto it = rec.find(name);
    if (it == rec.end() || it->is_null()) return 0.0;
    if (!it->is_number()) schema_fail(path + "/" + name, "expected a number");
    return it->get<double>();
}

ParamValue value_from_json(const ojson& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return v.get<std::string>();
    schema_fail(path, "parameter values must be numbers or strings");
}

ojson value_to_json(const ParamValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    const double d = std::get<double>(v);
    if (std::floor(d) == d && std::fabs(d) < 9007199254740992.0) {
        return static_cast<std::int64_t>(d);
    }
    return d;
}

struct ParsedCache {
    SpaceMeta meta;
    std::vector<ParameterDef> parameters;
    std::vector<ConfigRecord> records;
    std::vector<std::string> violations;
};

ParsedCache parse_document(const ojson& doc) {
    ParsedCache pc;
    if (!doc.is_object()) schema_fail("", "top level must be an object");

    const auto sv = doc.find("schema_version");
    if (sv == doc.end()) schema_fail("/schema_version", "missing");
    if (!sv->is_string() || sv->get<std::string>() != "1.0") {
        schema_fail("/schema_version", "unsupported version (expected \"1.0\")");
    }

    const auto md = doc.find("metadata");
    if (md == doc.end() || !md->is_object()) schema_fail("/metadata", "missing or not an object");
    pc.meta.kernel_name = require_string(*md, "kernel_name", "/metadata");
    pc.meta.device_name = require_string(*md, "device_name", "/metadata");
    pc.meta.input_id = require_string(*md, "input_id", "/metadata", false);
    if (md->contains("objective_units")) pc.meta.objective_units = require_string(*md, "objective_units", "/metadata");
    if (md->contains("time_units")) pc.meta.time_units = require_string(*md, "time_units", "/metadata");
    pc.meta.provenance = require_string(*md, "provenance", "/metadata", false);
    if (const auto lb = md->find("lower_is_better"); lb != md->end()) {
        if (!lb->is_boolean()) schema_fail("/metadata/lower_is_better", "expected a boolean");
        pc.meta.lower_is_better = lb->get<bool>();
    }

    const auto ps = doc.find("parameters");
    if (ps == doc.end() || !ps->is_array()) schema_fail("/parameters", "missing or not an array");
    for (std::size_t i = 0; i < ps->size(); ++i) {
        const auto& p = (*ps)[i];
        const std::string path = "/parameters/" + std::to_string(i);
        if (!p.is_object()) schema_fail(path, "expected an object");
        ParameterDef def;
        def.name = require_string(p, "name", path);
        const auto vs = p.find("values");
        if (vs == p.end() || !vs->is_array()) schema_fail(path + "/values", "missing or not an array");
        for (std::size_t j = 0; j < vs->size(); ++j) {
            def.values.push_back(value_from_json((*vs)[j], path + "/values/" + std::to_string(j)));
        }
        pc.parameters.push_back(std::move(def));
    }

    const auto cache = doc.find("cache");
    if (cache == doc.end() || !cache->is_object()) schema_fail("/cache", "missing or not an object");

    check_definition(pc.meta, pc.parameters, pc.violations);
    if (!pc.violations.empty()) {
        return pc;  // keys cannot be decoded reliably against a broken definition
    }

    std::vector<std::unordered_map<std::string, std::size_t>> lookup(pc.parameters.size());
    std::size_t total = 1;
    for (std::size_t i = 0; i < pc.parameters.size(); ++i) {
        for (std::size_t j = 0; j < pc.parameters[i].values.size(); ++j) {
            lookup[i].emplace(render_value(pc.parameters[i].values[j]), j);
        }
        total *= pc.parameters[i].values.size();
    }

    pc.records.assign(total, ConfigRecord{});
    std::vector<bool> present(total, false);

    for (const auto& [key, rec] : cache->items()) {
        const std::string path = "/cache/" + key;
        const auto parts = split(key, ',');
        std::optional<std::size_t> flat = 0;
        if (parts.size() != pc.parameters.size()) {
            flat.reset();
        } else {
            std::size_t f = 0;
            for (std::size_t i = 0; i < parts.size(); ++i) {
                const auto it = lookup[i].find(parts[i]);
                if (it == lookup[i].end()) {
                    flat.reset();
                    break;
                }
                f = f * pc.parameters[i].values.size() + it->second;
            }
            if (flat) flat = f;
        }
        if (!flat) {
            pc.violations.push_back("record '" + key +
                                    "': key does not decode to one value per parameter");
            continue;
        }
        if (present[*flat]) {
            pc.violations.push_back("record '" + key + "': duplicate configuration");
            continue;
        }
        if (!rec.is_object()) schema_fail(path, "expected an object");

        ConfigRecord r;
        if (const auto it = rec.find("objective"); it != rec.end() && !it->is_null()) {
            if (!it->is_number()) schema_fail(path + "/objective", "expected a number or null");
            r.objective = it->get<double>();
        }
        if (const auto it = rec.find("invalid"); it != rec.end()) {
            if (!it->is_boolean()) schema_fail(path + "/invalid", "expected a boolean");
            r.invalid = it->get<bool>();
        }
        if (const auto it = rec.find("error_kind"); it != rec.end() && !it->is_null()) {
            if (!it->is_string()) schema_fail(path + "/error_kind", "expected a string or null");
            r.error_kind = it->get<std::string>();
        }
        r.compile_time_s = read_time(rec, "compile_time_s", path);
        r.framework_time_s = read_time(rec, "framework_time_s", path);
        r.verification_time_s = read_time(rec, "verification_time_s", path);
        if (const auto it = rec.find("runtimes_s"); it != rec.end() && !it->is_null()) {
            if (!it->is_array()) schema_fail(path + "/runtimes_s", "expected an array");
            for (const auto& t : *it) {
                if (!t.is_number()) schema_fail(path + "/runtimes_s", "expected numbers");
                r.runtimes_s.push_back(t.get<double>());
            }
        }
        check_record(key, r, pc.violations);
        pc.records[*flat] = std::move(r);
        present[*flat] = true;
    }

    bool any_valid = false;
    std::vector<std::size_t> idx(pc.parameters.size());
    for (std::size_t f = 0; f < total; ++f) {
        if (!present[f]) {
            std::size_t rem = f;
            std::vector<std::string> parts(pc.parameters.size());
            for (std::size_t i = pc.parameters.size(); i-- > 0;) {
                const auto card = pc.parameters[i].values.size();
                parts[i] = render_value(pc.parameters[i].values[rem % card]);
                rem /= card;
            }
            pc.violations.push_back("record '" + join(parts, ',') + "': missing from cache");
            continue;
        }
        if (!pc.records[f].invalid && pc.records[f].objective &&
            std::isfinite(*pc.records[f].objective)) {
            any_valid = true;
        }
    }
    if (!any_valid) pc.violations.push_back("space: no valid record");
    return pc;
}

std::string inflate_gzip(const std::string& data, const std::string& name) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) throw IoError("zlib initialisation failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    std::string out;
    char buf[1 << 15];
    int ret = Z_OK;
    while (ret != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw IoError(name + ": corrupt gzip stream");
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
        if (ret == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw IoError(name + ": truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string render_value(const ParamValue& value) {
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    return format_number(std::get<double>(value));
}

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
          std::string msg = "search space validation failed (" +
                            std::to_string(violations.size()) + " violation(s))";
          for (const auto& v : violations) msg += "\n  " + v;
          return msg;
      }()),
      violations_(std::move(violations)) {}

std::string SpaceMeta::id() const {
    std::string out = kernel_name + "@" + device_name;
    if (!input_id.empty()) out += "@" + input_id;
    return out;
}

SearchSpace::SearchSpace(SpaceMeta meta, std::vector<ParameterDef> parameters,
                         std::vector<ConfigRecord> records)
    : meta_(std::move(meta)), parameters_(std::move(parameters)), records_(std::move(records)) {
    std::size_t total = parameters_.empty() ? 0 : 1;
    for (const auto& p : parameters_) {
        cardinalities_.push_back(p.values.size());
        total *= p.values.size();
    }
    if (records_.size() != total) {
        throw ArgumentError("search space: expected " + std::to_string(total) +
                            " records for the parameter product, got " +
                            std::to_string(records_.size()));
    }
    strides_.assign(parameters_.size(), 1);
    for (std::size_t i = parameters_.size(); i-- > 1;) {
        strides_[i - 1] = strides_[i] * cardinalities_[i];
    }
    value_lookup_.resize(parameters_.size());
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
        for (std::size_t j = 0; j < parameters_[i].values.size(); ++j) {
            value_lookup_[i].emplace(render_value(parameters_[i].values[j]), j);
        }
    }
}

std::string SearchSpace::key(std::size_t flat) const {
    if (flat >= records_.size()) {
        throw ArgumentError("configuration index " + std::to_string(flat) + " out of range");
    }
    std::string out;
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
        if (i) out += ',';
        out += render_value(parameters_[i].values[(flat / strides_[i]) % cardinalities_[i]]);
    }
    return out;
}

std::optional<std::size_t> SearchSpace::find(std::string_view key) const {
    const auto parts = split(key, ',');
    if (parts.size() != parameters_.size()) return std::nullopt;
    std::size_t flat = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto it = value_lookup_[i].find(parts[i]);
        if (it == value_lookup_[i].end()) return std::nullopt;
        flat += it->second * strides_[i];
    }
    return flat;
}

std::size_t SearchSpace::flatten(std::span<const std::size_t> indices) const {
    if (!in_range(indices)) throw ArgumentError("index vector out of range for search space");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < indices.size(); ++i) flat += indices[i] * strides_[i];
    return flat;
}

std::vector<std::size_t> SearchSpace::unflatten(std::size_t flat) const {
    if (flat >= records_.size()) {
        throw ArgumentError("configuration index " + std::to_string(flat) + " out of range");
    }
    std::vector<std::size_t> out(parameters_.size());
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
        out[i] = (flat / strides_[i]) % cardinalities_[i];
    }
    return out;
}

bool SearchSpace::in_range(std::span<const std::size_t> indices) const noexcept {
    if (indices.size() != parameters_.size()) return false;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= cardinalities_[i]) return false;
    }
    return true;
}

std::optional<double> SearchSpace::oriented_objective(std::size_t flat) const {
    const auto& r = records_.at(flat);
    if (r.invalid || !r.objective) return std::nullopt;
    return meta_.lower_is_better ? *r.objective : -*r.objective;
}

SpaceStats space_stats(const SearchSpace& space) {
    SpaceStats s;
    s.total_count = space.size();
    std::vector<double> valid;
    valid.reserve(space.size());
    double sum = 0.0, comp = 0.0;
    for (std::size_t f = 0; f < space.size(); ++f) {
        if (auto v = space.oriented_objective(f)) valid.push_back(*v);
        // Neumaier summation keeps the mean independent of magnitude spread.
        const double c = evaluation_cost(space.record(f));
        const double t = sum + c;
        comp += std::fabs(sum) >= std::fabs(c) ? (sum - t) + c : (c - t) + sum;
        sum = t;
    }
    s.valid_count = valid.size();
    if (valid.empty()) throw ValidationError({"space: no valid record"});
    std::sort(valid.begin(), valid.end());
    s.optimum = valid.front();
    const std::size_t n = valid.size();
    s.median_valid = n % 2 ? valid[n / 2] : 0.5 * (valid[n / 2 - 1] + valid[n / 2]);
    s.mean_eval_cost_s = s.total_count ? (sum + comp) / static_cast<double>(s.total_count) : 0.0;
    return s;
}

ValidationReport validate_space(const SearchSpace& space) {
    ValidationReport report;
    check_definition(space.meta(), space.parameters(), report.violations);
    bool any_valid = false;
    for (std::size_t f = 0; f < space.size(); ++f) {
        const auto& r = space.record(f);
        check_record(space.key(f), r, report.violations);
        if (!r.invalid && r.objective && std::isfinite(*r.objective)) any_valid = true;
    }
    if (!any_valid) report.violations.push_back("space: no valid record");
    return report;
}

// ---------------------------------------------------------------------------

std::string read_file_maybe_gzip(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read '" + path.string() + "'");
    std::string data = ss.str();
    if (data.size() >= 2 && static_cast<unsigned char>(data[0]) == 0x1f &&
        static_cast<unsigned char>(data[1]) == 0x8b) {
        return inflate_gzip(data, path.string());
    }
    return data;
}

SearchSpace parse_cache(const nlohmann::ordered_json& doc) {
    auto pc = parse_document(doc);
    if (!pc.violations.empty()) throw ValidationError(std::move(pc.violations));
    return SearchSpace(std::move(pc.meta), std::move(pc.parameters), std::move(pc.records));
}

ValidationReport validate_cache(const nlohmann::ordered_json& doc) {
    auto pc = parse_document(doc);
    return ValidationReport{std::move(pc.violations)};
}

SearchSpace load_cache(const std::filesystem::path& path) {
    const std::string text = read_file_maybe_gzip(path);
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": not valid JSON: " + e.what());
    }
    return parse_cache(doc);
}

std::string serialize_cache(const SearchSpace& space) {
    ojson doc;
    doc["schema_version"] = "1.0";
    const auto& m = space.meta();
    ojson md;
    md["kernel_name"] = m.kernel_name;
    md["device_name"] = m.device_name;
    md["input_id"] = m.input_id;
    md["objective_units"] = m.objective_units;
    md["lower_is_better"] = m.lower_is_better;
    md["time_units"] = m.time_units;
    if (!m.provenance.empty()) md["provenance"] = m.provenance;
    doc["metadata"] = std::move(md);

    ojson params = ojson::array();
    for (const auto& p : space.parameters()) {
        ojson values = ojson::array();
        for (const auto& v : p.values) values.push_back(value_to_json(v));
        params.push_back(ojson{{"name", p.name}, {"values", std::move(values)}});
    }
    doc["parameters"] = std::move(params);

    ojson cache = ojson::object();
    for (std::size_t f = 0; f < space.size(); ++f) {
        const auto& r = space.record(f);
        ojson rec;
        rec["objective"] = r.objective ? ojson(*r.objective) : ojson(nullptr);
        rec["invalid"] = r.invalid;
        rec["error_kind"] = r.error_kind ? ojson(*r.error_kind) : ojson(nullptr);
        rec["compile_time_s"] = r.compile_time_s;
        rec["runtimes_s"] = r.runtimes_s;
        rec["framework_time_s"] = r.framework_time_s;
        rec["verification_time_s"] = r.verification_time_s;
        cache[space.key(f)] = std::move(rec);
    }
    doc["cache"] = std::move(cache);
    return doc.dump(1) + "\n";
}

void save_cache(const SearchSpace& space, const std::filesystem::path& path) {
    const std::string text = serialize_cache(space);
    if (path.extension() == ".gz") {
        gzFile gz = gzopen(path.string().c_str(), "wb9");
        if (!gz) throw IoError("cannot open '" + path.string() + "' for writing");
        const int written = gzwrite(gz, text.data(), static_cast<unsigned>(text.size()));
        const int closed = gzclose(gz);
        if (written != static_cast<int>(text.size()) || closed != Z_OK) {
            throw IoError("cannot write '" + path.string() + "'");
        }
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("cannot write '" + path.string() + "'");
}

}  // namespace metatune
