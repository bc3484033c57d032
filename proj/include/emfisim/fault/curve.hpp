#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include "emfisim/common.hpp"
#include "emfisim/memhier/cache.hpp"

namespace emfisim::fault {

enum class CurveShape : uint8_t {
    Triangular, // p falls linearly to zero at |power - peak| = width
    Gaussian,   // p = peak_probability * exp(-((power-peak)/width)^2 / 2)
};

// Success probability of a pulse as a function of injected power. Unimodal
// around the peak; the exact shape away from the peak is a free parameter,
// only the peak location and height are pinned by measurements.
struct ResponseCurve {
    double peak_power_dbm = -1.7;
    double peak_probability = 0.96;
    double width_dbm = 3.0;
    CurveShape shape = CurveShape::Triangular;

    double probability(double power_dbm) const {
        require(width_dbm > 0, "ResponseCurve: width must be positive");
        require(peak_probability >= 0 && peak_probability <= 1,
                "ResponseCurve: peak probability must be in [0,1]");
        double d = std::fabs(power_dbm - peak_power_dbm);
        if (shape == CurveShape::Gaussian)
            return peak_probability * std::exp(-0.5 * (d / width_dbm) * (d / width_dbm));
        return d >= width_dbm ? 0.0 : peak_probability * (1.0 - d / width_dbm);
    }

    friend bool operator==(const ResponseCurve&, const ResponseCurve&) = default;
};

inline constexpr double kPeakPowerCachesOnDbm = -1.7;
inline constexpr double kPeakPowerCachesOffDbm = 4.5;
inline constexpr double kDefaultPeakProbability = 0.96;

// With both caches enabled the best response sits at lower pulse energy than
// with one or both disabled; the internal cache load drops the local supply
// enough to shift the optimum.
inline ResponseCurve default_curve(const memhier::CacheConfig& cfg) {
    ResponseCurve c;
    c.peak_power_dbm = (cfg.i_cache_enabled && cfg.d_cache_enabled) ? kPeakPowerCachesOnDbm
                                                                    : kPeakPowerCachesOffDbm;
    return c;
}

// One injection: time from the trigger signal and pulse power. The 1.5 ns
// physical pulse width is below the refill granularity, so a pulse maps to
// exactly one refill event.
struct FaultPulse {
    uint64_t delay_ns = 0;
    double power_dbm = 0.0;
    uint64_t rng_seed = 0;
};

inline constexpr double kDefaultPowerMinDbm = -5.0;
inline constexpr double kDefaultPowerMaxDbm = 9.0;

// Bernoulli draw against the curve; deterministic for a given seed.
inline bool roll_fault(const FaultPulse& pulse, const ResponseCurve& curve) {
    Rng rng(pulse.rng_seed);
    return rng.bernoulli(curve.probability(pulse.power_dbm));
}

// Key-value curve file: peak_power_dbm, peak_probability, width_dbm, shape.
inline ResponseCurve load_curve_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open curve file: " + path);
    ResponseCurve c;
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
        if (key == "peak_power_dbm") c.peak_power_dbm = std::stod(val);
        else if (key == "peak_probability") c.peak_probability = std::stod(val);
        else if (key == "width_dbm") c.width_dbm = std::stod(val);
        else if (key == "shape") {
            if (val == "triangular") c.shape = CurveShape::Triangular;
            else if (val == "gaussian") c.shape = CurveShape::Gaussian;
            else throw IoError(path + ":" + std::to_string(line_no) + ": unknown shape " + val);
        } else {
            throw IoError(path + ":" + std::to_string(line_no) + ": unknown key " + key);
        }
    }
    require(c.width_dbm > 0, "curve width must be positive");
    require(c.peak_probability >= 0 && c.peak_probability <= 1,
            "curve peak probability must be in [0,1]");
    return c;
}

} // namespace emfisim::fault
