#include "superdiff/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "superdiff/rgflow.hpp"

namespace sdiff {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw ConfigError("config key '" + path + "': " + what);
}

/// Reads the members of one JSON object, remembering which keys were used
/// so that leftovers can be reported.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) schema_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        used_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    template <class T>
    void read(const std::string& key, T& out) {
        const json* v = find(key);
        if (!v) return;
        out = convert<T>(*v, key_path(key));
    }

    template <class T>
    void read_optional(const std::string& key, std::optional<T>& out) {
        const json* v = find(key);
        if (!v || v->is_null()) return;
        out = convert<T>(*v, key_path(key));
    }

    template <class T>
    void read_list(const std::string& key, std::vector<T>& out) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_array()) schema_error(key_path(key), "expected an array");
        out.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
            out.push_back(convert<T>((*v)[i], key_path(key) + "[" + std::to_string(i) + "]"));
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!used_.count(it.key())) schema_error(key_path(it.key()), "unknown key");
    }

    template <class T>
    static T convert(const json& v, const std::string& path) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) schema_error(path, "expected a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) schema_error(path, "expected a string");
            return v.get<std::string>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) schema_error(path, "expected a number");
            return v.get<T>();
        } else {
            static_assert(std::is_integral_v<T>);
            if (!v.is_number_integer() && !v.is_number_unsigned()) schema_error(path, "expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && v.get<long long>() < 0) schema_error(path, "expected a non-negative integer");
                return static_cast<T>(v.get<unsigned long long>());
            } else {
                return static_cast<T>(v.get<long long>());
            }
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> used_;
};

void check(bool ok, const std::string& inequality) {
    if (!ok) throw ConfigError("config invariant violated: " + inequality);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["dim"] = c.field.dim;
    j["nu"] = c.field.nu;
    j["n_min"] = c.field.n_min;
    j["L"] = c.field.L;
    j["K"] = c.field.K;
    j["cells_per_unit"] = c.field.cells_per_unit;
    j["band_period"] = c.field.band_period;
    j["mollify"] = c.field.mollify;
    j["profile"] = c.profile;
    j["profile_steepness"] = c.profile_steepness;
    j["seed"] = c.seed;
    j["sim_seed"] = c.sim_seed;
    j["include_bands"] = c.include_bands;
    j["sdf_max_side"] = c.sdf_max_side;
    j["output_dir"] = c.output_dir;

    json cs;
    cs["enabled"] = c.cstar.enabled;
    cs["l"] = c.cstar.l ? json(*c.cstar.l) : json(nullptr);
    cs["m"] = c.cstar.m ? json(*c.cstar.m) : json(nullptr);
    cs["samples"] = c.cstar.samples;
    j["cstar"] = cs;

    json ce;
    ce["scales"] = c.cell.scales;
    ce["samples"] = c.cell.samples;
    ce["cells_per_unit"] = c.cell.cells_per_unit;
    ce["boundary"] = to_string(c.cell.boundary);
    ce["solver"] = to_string(c.cell.solver);
    ce["tol"] = c.cell.tol;
    j["cell"] = ce;

    json fl;
    fl["cstar"] = c.flow.cstar;
    fl["s0"] = c.flow.s0 ? json(*c.flow.s0) : json(nullptr);
    fl["from"] = c.flow.from;
    fl["to"] = c.flow.to;
    j["flow"] = fl;

    json si;
    si["particles"] = c.sim.particles;
    si["tmax"] = c.sim.tmax;
    si["dt"] = c.sim.dt;
    si["annealed"] = c.sim.annealed;
    si["record_start"] = c.sim.record_start;
    si["record_ratio"] = c.sim.record_ratio;
    si["block_size"] = c.sim.block_size;
    si["exit_radii"] = c.sim.exit_radii;
    si["allow_outrun"] = c.sim.allow_outrun;
    j["sim"] = si;
    return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    ObjectReader r(root, "");
    r.read("dim", c.field.dim);
    r.read("nu", c.field.nu);
    r.read("n_min", c.field.n_min);
    r.read("L", c.field.L);
    r.read("K", c.field.K);
    r.read("cells_per_unit", c.field.cells_per_unit);
    r.read("band_period", c.field.band_period);
    r.read("mollify", c.field.mollify);
    r.read("profile", c.profile);
    r.read("profile_steepness", c.profile_steepness);
    r.read("seed", c.seed);
    r.read("sim_seed", c.sim_seed);
    r.read("include_bands", c.include_bands);
    r.read("sdf_max_side", c.sdf_max_side);
    r.read("output_dir", c.output_dir);

    if (const json* v = r.find("cstar")) {
        ObjectReader s(*v, r.key_path("cstar"));
        s.read("enabled", c.cstar.enabled);
        s.read_optional("l", c.cstar.l);
        s.read_optional("m", c.cstar.m);
        s.read("samples", c.cstar.samples);
        s.finish();
    }
    if (const json* v = r.find("cell")) {
        ObjectReader s(*v, r.key_path("cell"));
        s.read_list("scales", c.cell.scales);
        s.read("samples", c.cell.samples);
        s.read("cells_per_unit", c.cell.cells_per_unit);
        std::string bc = to_string(c.cell.boundary), solver = to_string(c.cell.solver);
        s.read("boundary", bc);
        s.read("solver", solver);
        try {
            c.cell.boundary = parse_cell_boundary(bc);
        } catch (const std::exception& e) {
            schema_error(s.key_path("boundary"), e.what());
        }
        try {
            c.cell.solver = parse_cell_solver(solver);
        } catch (const std::exception& e) {
            schema_error(s.key_path("solver"), e.what());
        }
        s.read("tol", c.cell.tol);
        s.finish();
    }
    if (const json* v = r.find("flow")) {
        ObjectReader s(*v, r.key_path("flow"));
        s.read("cstar", c.flow.cstar);
        s.read_optional("s0", c.flow.s0);
        s.read("from", c.flow.from);
        s.read("to", c.flow.to);
        s.finish();
    }
    if (const json* v = r.find("sim")) {
        ObjectReader s(*v, r.key_path("sim"));
        s.read("particles", c.sim.particles);
        s.read("tmax", c.sim.tmax);
        if (const json* dt = s.find("dt")) {
            if (dt->is_string()) {
                if (dt->get<std::string>() != "auto") schema_error(s.key_path("dt"), "expected a number or \"auto\"");
                c.sim.dt = 0.0;
            } else {
                c.sim.dt = ObjectReader::convert<double>(*dt, s.key_path("dt"));
            }
        }
        s.read("annealed", c.sim.annealed);
        s.read("record_start", c.sim.record_start);
        s.read("record_ratio", c.sim.record_ratio);
        s.read("block_size", c.sim.block_size);
        s.read_list("exit_radii", c.sim.exit_radii);
        s.read("allow_outrun", c.sim.allow_outrun);
        s.finish();
    }
    r.finish();

    try {
        c.field.profile = make_bump_profile(parse_profile_kind(c.profile), c.profile_steepness);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config key 'profile': ") + e.what());
    }
    c.field.seed = c.seed;
    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<int> cell_scales(const ExperimentConfig& cfg) {
    if (!cfg.cell.scales.empty()) return cfg.cell.scales;
    return {cfg.field.L + 2};
}

void validate_config(const ExperimentConfig& c, bool check_paths) {
    const FieldParams& f = c.field;
    check(f.dim == 2 || f.dim == 3, "dim in {2, 3}");
    check(f.nu > 0.0 && f.nu <= 1.0, "0 < nu <= 1");
    check(f.L >= f.n_min, "L >= n_min");
    check(f.K >= f.L + 2, "K >= L+2");
    check(f.cells_per_unit >= 8.0 * std::pow(3.0, -f.n_min) * (1.0 - 1e-12), "cells_per_unit >= 8*3^(-n_min)");
    try {
        validate(f);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config invariant violated: ") + e.what());
    }

    if (c.cstar.enabled) {
        const int l = c.cstar.l.value_or(f.n_min), m = c.cstar.m.value_or(f.L);
        check(l >= f.n_min && m <= f.L, "n_min <= cstar.l and cstar.m <= L");
        check(l < m, "cstar.l < cstar.m");
        check(c.cstar.samples >= 1, "cstar.samples >= 1");
    }

    check(c.cell.samples >= 0, "cell.samples >= 0");
    check(c.cell.cells_per_unit > 0.0, "cell.cells_per_unit > 0");
    check(c.cell.tol > 0.0, "cell.tol > 0");
    if (c.cell.samples > 0) {
        check(f.dim == 2, "cell problems require dim = 2");
        for (int m : cell_scales(c)) {
            const double cells = c.cell.cells_per_unit * std::pow(3.0, m);
            check(std::fabs(cells - std::round(cells)) < 1e-9 * std::max(1.0, cells),
                  "cell.cells_per_unit * 3^m is an integer (m = " + std::to_string(m) + ")");
            check(std::round(cells) >= 3.0, "at least 3 mesh cells per cube side (m = " + std::to_string(m) + ")");
            const double period = static_cast<double>(effective_band_period(f)) * std::pow(3.0, f.L);
            check(std::pow(3.0, m) <= period, "cube side 3^m <= period of band L (m = " + std::to_string(m) + ")");
        }
    }

    if (c.flow.cstar != "closed-form" && c.flow.cstar != "estimated") {
        bool ok = false;
        try {
            ok = parse_cstar(c.flow.cstar) > 0.0;
        } catch (const std::invalid_argument&) {
        }
        check(ok, "flow.cstar is \"closed-form\", \"closed-form:<d>\", \"estimated\" or a positive number");
    }
    check(c.flow.cstar != "estimated" || c.cstar.enabled, "flow.cstar = \"estimated\" needs cstar.enabled");
    check(c.flow.to >= c.flow.from, "flow.to >= flow.from");
    check(!c.flow.s0 || *c.flow.s0 > 0.0, "flow.s0 > 0");

    check(c.sim.particles >= 1, "sim.particles >= 1");
    check(c.sim.tmax > 0.0, "sim.tmax > 0");
    check(c.sim.dt >= 0.0, "sim.dt >= 0");
    check(c.sim.annealed >= 1, "sim.annealed >= 1");
    check(c.sim.record_ratio > 1.0, "sim.record_ratio > 1");
    check(c.sim.record_start > 0.0 && c.sim.record_start <= c.sim.tmax, "0 < sim.record_start <= sim.tmax");
    check(c.sim.block_size >= 1, "sim.block_size >= 1");
    for (double r : c.sim.exit_radii) check(r > 0.0, "sim.exit_radii > 0");

    if (check_paths) {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(c.output_dir, ec);
        check(!ec && fs::is_directory(c.output_dir), "output_dir is a writable directory");
        const fs::path probe = fs::path(c.output_dir) / ".write-probe";
        {
            std::ofstream out(probe);
            check(static_cast<bool>(out << "ok"), "output_dir is a writable directory");
        }
        fs::remove(probe, ec);
    }
}

std::string effective_config_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    // output_dir is excluded from the hash.
    json j = to_json(cfg);
    j.erase("output_dir");
    return sha256_hex(j.dump());
}

}  // namespace sdiff
