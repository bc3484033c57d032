#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>

#include "emfisim/campaign/sweep.hpp"

namespace emfisim::campaign {

// Campaign description file: `key = value` lines, `#` comments. Either
// `program` (assembly source path) or `scenario` (built-in fixture name)
// selects the target. Powers are decimal dBm and are stored in centi-dBm.
struct CampaignConfig {
    std::string program_path;  // one of program_path / scenario_name
    std::string scenario_name;
    memhier::CacheConfig caches;
    SweepGrid grid;
    uint64_t seed = 1;
    uint64_t trigger_cycle = 0;
    std::optional<double> curve_peak_power_dbm;
    std::optional<double> curve_peak_probability;
    std::optional<double> curve_width_dbm;
    std::optional<fault::CurveShape> curve_shape;
    bool grid_power_given = false;

    // Per-field overrides on top of the configuration-dependent default.
    fault::ResponseCurve resolved_curve() const {
        fault::ResponseCurve c = fault::default_curve(caches);
        if (curve_peak_power_dbm) c.peak_power_dbm = *curve_peak_power_dbm;
        if (curve_peak_probability) c.peak_probability = *curve_peak_probability;
        if (curve_width_dbm) c.width_dbm = *curve_width_dbm;
        if (curve_shape) c.shape = *curve_shape;
        return c;
    }
};

namespace cfgdetail {

inline int32_t parse_cdbm(const std::string& v) {
    double d = std::stod(v);
    double c = d * 100.0;
    int32_t r = int32_t(c < 0 ? c - 0.5 : c + 0.5);
    require(std::fabs(c - r) < 1e-6, "power values must be multiples of 0.01 dBm");
    return r;
}

inline bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw IoError("expected boolean, got '" + v + "'");
}

} // namespace cfgdetail

inline CampaignConfig parse_campaign_config(std::istream& in, const std::string& origin) {
    CampaignConfig cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto cut = line.find('#'); cut != std::string::npos) line = line.substr(0, cut);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto strip = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = strip(line.substr(0, eq));
        std::string val = strip(line.substr(eq + 1));
        if (key.empty()) continue;
        try {
            if (key == "program") cfg.program_path = val;
            else if (key == "scenario") cfg.scenario_name = val;
            else if (key == "icache") cfg.caches.i_cache_enabled = cfgdetail::parse_bool(val);
            else if (key == "dcache") cfg.caches.d_cache_enabled = cfgdetail::parse_bool(val);
            else if (key == "delay_start_ns") cfg.grid.delay_start_ns = std::stoull(val);
            else if (key == "delay_stop_ns") cfg.grid.delay_stop_ns = std::stoull(val);
            else if (key == "delay_step_ns") cfg.grid.delay_step_ns = std::stoull(val);
            else if (key == "power_start_dbm") {
                cfg.grid.power_start_cdbm = cfgdetail::parse_cdbm(val);
                cfg.grid_power_given = true;
            } else if (key == "power_stop_dbm") {
                cfg.grid.power_stop_cdbm = cfgdetail::parse_cdbm(val);
                cfg.grid_power_given = true;
            } else if (key == "power_step_dbm") {
                cfg.grid.power_step_cdbm = cfgdetail::parse_cdbm(val);
            } else if (key == "reps") cfg.grid.reps = uint32_t(std::stoul(val));
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "trigger_cycle") cfg.trigger_cycle = std::stoull(val);
            else if (key == "curve_peak_power_dbm") cfg.curve_peak_power_dbm = std::stod(val);
            else if (key == "curve_peak_probability") cfg.curve_peak_probability = std::stod(val);
            else if (key == "curve_width_dbm") cfg.curve_width_dbm = std::stod(val);
            else if (key == "curve_shape") {
                if (val == "gaussian") cfg.curve_shape = fault::CurveShape::Gaussian;
                else if (val == "triangular") cfg.curve_shape = fault::CurveShape::Triangular;
                else throw IoError("unknown curve shape '" + val + "'");
            } else {
                throw IoError("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw IoError(origin + ":" + std::to_string(line_no) + ": bad value for " + key);
        } catch (const IoError& e) {
            throw IoError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (cfg.program_path.empty() == cfg.scenario_name.empty())
        throw IoError(origin + ": exactly one of 'program' or 'scenario' is required");
    if (!cfg.grid_power_given) {
        auto d = SweepGrid::defaults_for(cfg.caches, cfg.grid.delay_start_ns,
                                         cfg.grid.delay_stop_ns);
        cfg.grid.power_start_cdbm = d.power_start_cdbm;
        cfg.grid.power_stop_cdbm = d.power_stop_cdbm;
    }
    return cfg;
}

inline CampaignConfig load_campaign_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open campaign config: " + path);
    return parse_campaign_config(f, path);
}

} // namespace emfisim::campaign
