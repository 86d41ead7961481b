#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slelab/errors.hpp"
#include "slelab/experiments.hpp"
#include "slelab/params.hpp"

namespace slelab {

inline constexpr const char* tool_version = "0.1.0";

// Flat CLI-facing configuration. `provenance` records where each field's
// value came from (default, file, or flag) for the startup echo.
struct CliConfig {
    std::string experiment;
    double kappa = 6.0;
    double dt = 1e-4;
    std::int64_t samples = 20000;
    std::uint64_t seed = 1;
    int level = 8;
    int level_lo = 4;
    int level_hi = 11;
    double delta = 0.125;
    double y = 0.5;
    double x = 1.0;
    std::vector<double> eps = {0.0625, 0.03125, 0.015625};
    std::vector<double> radii = {0.02, 0.04, 0.08};
    std::string grid = "0:1:0.01";
    double horizon_factor = 4.0;
    double dt_coeff = 0.1;
    std::string censor_policy = "conditional";
    int threads = 0;

    std::map<std::string, std::string> provenance;

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"experiment", experiment},
            {"kappa", kappa},
            {"dt", dt},
            {"samples", samples},
            {"seed", seed},
            {"level", level},
            {"levels", {level_lo, level_hi}},
            {"delta", delta},
            {"y", y},
            {"x", x},
            {"eps", eps},
            {"radii", radii},
            {"grid", grid},
            {"horizon_factor", horizon_factor},
            {"dt_coeff", dt_coeff},
            {"censor_policy", censor_policy},
            {"threads", threads},
        };
    }

    ExperimentConfig experiment_config() const {
        ExperimentConfig cfg;
        cfg.params = sle_params(kappa);
        cfg.dt = dt;
        cfg.samples = samples;
        cfg.level = level;
        cfg.delta_margin = delta;
        cfg.seed = seed;
        cfg.horizon_factor = horizon_factor;
        cfg.dt_coeff = dt_coeff;
        if (censor_policy == "conditional")
            cfg.policy = CensorPolicy::conditional;
        else if (censor_policy == "bits")
            cfg.policy = CensorPolicy::bits;
        else
            throw validation_error("censor_policy must be 'conditional' or 'bits'");
        cfg.threads = threads;
        cfg.validate();
        return cfg;
    }
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "experiment", "kappa", "dt",   "samples",        "seed",     "level",
        "levels",     "delta", "y",    "x",              "eps",      "radii",
        "grid",       "horizon_factor", "dt_coeff",      "censor_policy", "threads",
    };
    return keys;
}

} // namespace detail

// Applies a JSON object onto a config. Unknown keys are rejected (strict
// mode); `source` labels the provenance ("file" or "flag").
inline void apply_json(CliConfig& cfg, const nlohmann::json& j, const std::string& source) {
    if (!j.is_object()) throw validation_error("config: top level must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!detail::known_config_keys().count(it.key()))
            throw validation_error("config: unknown key '" + it.key() + "'");
    auto set = [&](const char* key, auto& slot) {
        if (j.contains(key)) {
            slot = j.at(key).get<std::decay_t<decltype(slot)>>();
            cfg.provenance[key] = source;
        }
    };
    set("experiment", cfg.experiment);
    set("kappa", cfg.kappa);
    set("dt", cfg.dt);
    set("samples", cfg.samples);
    set("seed", cfg.seed);
    set("level", cfg.level);
    set("delta", cfg.delta);
    set("y", cfg.y);
    set("x", cfg.x);
    set("eps", cfg.eps);
    set("radii", cfg.radii);
    set("grid", cfg.grid);
    set("horizon_factor", cfg.horizon_factor);
    set("dt_coeff", cfg.dt_coeff);
    set("censor_policy", cfg.censor_policy);
    set("threads", cfg.threads);
    if (j.contains("levels")) {
        const auto& lv = j.at("levels");
        if (!lv.is_array() || lv.size() != 2)
            throw validation_error("config: 'levels' must be [lo, hi]");
        cfg.level_lo = lv[0].get<int>();
        cfg.level_hi = lv[1].get<int>();
        cfg.provenance["levels"] = source;
    }
}

inline CliConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("config: " + path + " is not valid JSON: " + e.what());
    }
    CliConfig cfg;
    apply_json(cfg, j, "file");
    return cfg;
}

inline CliConfig parse_config_json(const nlohmann::json& j, const std::string& source = "file") {
    CliConfig cfg;
    apply_json(cfg, j, source);
    return cfg;
}

// one echo line per field: "name = value (provenance)"
inline std::vector<std::string> echo_config(const CliConfig& cfg) {
    std::vector<std::string> lines;
    const auto j = cfg.to_json();
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto p = cfg.provenance.find(it.key());
        const std::string src = p == cfg.provenance.end() ? "default" : p->second;
        lines.push_back(it.key() + " = " + it.value().dump() + " (" + src + ")");
    }
    return lines;
}

// grid spec "start:stop:step"
inline std::vector<double> parse_grid_spec(const std::string& spec) {
    double start = 0.0, stop = 0.0, step = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(spec);
    if (!(ss >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0))
        throw validation_error("grid spec must be start:stop:step, got '" + spec + "'");
    std::vector<double> out;
    for (double v = start; v <= stop + 1e-12; v += step) out.push_back(std::min(v, stop));
    if (!out.empty() && out.back() < stop) out.push_back(stop);
    return out;
}

} // namespace slelab
