#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "emfisim/campaign/sweep.hpp"

namespace emfisim::campaign {

inline const char* kReportHeader =
    "delay_ns,delay_cycle,power_dbm,n_runs,n_normal,n_model_fault,n_other_fault,n_crash,"
    "n_no_effect";

inline std::string format_dbm(int32_t cdbm) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", double(cdbm) / 100.0);
    return buf;
}

// One row per (delay, power) cell, preceded by `#` metadata lines that make
// the file self-describing and re-importable.
inline std::string report_to_csv(const CampaignReport& r) {
    std::string out;
    char buf[256];
    auto meta = [&](const char* key, const std::string& val) {
        out += "# ";
        out += key;
        out += "=";
        out += val;
        out += "\n";
    };
    meta("icache", r.config.i_cache_enabled ? "1" : "0");
    meta("dcache", r.config.d_cache_enabled ? "1" : "0");
    std::snprintf(buf, sizeof buf, "%.6g", r.curve.peak_power_dbm);
    meta("curve_peak_power_dbm", buf);
    std::snprintf(buf, sizeof buf, "%.6g", r.curve.peak_probability);
    meta("curve_peak_probability", buf);
    std::snprintf(buf, sizeof buf, "%.6g", r.curve.width_dbm);
    meta("curve_width_dbm", buf);
    meta("curve_shape",
         r.curve.shape == fault::CurveShape::Triangular ? "triangular" : "gaussian");
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(r.program_hash));
    meta("program_hash", buf);
    std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(r.seed));
    meta("seed", buf);
    std::snprintf(buf, sizeof buf, "%u", r.reps);
    meta("reps", buf);

    out += kReportHeader;
    out += "\n";
    for (const auto& c : r.cells) {
        std::snprintf(buf, sizeof buf, "%llu,%llu,%s,%u,%u,%u,%u,%u,%u\n",
                      static_cast<unsigned long long>(c.delay_ns),
                      static_cast<unsigned long long>(c.delay_cycle),
                      format_dbm(c.power_cdbm).c_str(), c.counts.total(), c.counts.n_normal,
                      c.counts.n_model_fault, c.counts.n_other_fault, c.counts.n_crash,
                      c.counts.n_no_effect);
        out += buf;
    }
    return out;
}

inline void export_report(const CampaignReport& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open report file for writing: " + path);
    f << report_to_csv(r);
    if (!f) throw IoError("write failed: " + path);
}

inline CampaignReport report_from_csv(std::istream& in, const std::string& origin = "<csv>") {
    CampaignReport r;
    std::string line;
    size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            std::string val = line.substr(eq + 1);
            while (!key.empty() && key.front() == ' ') key.erase(key.begin());
            while (!key.empty() && key.back() == ' ') key.pop_back();
            if (key == "icache") r.config.i_cache_enabled = val == "1";
            else if (key == "dcache") r.config.d_cache_enabled = val == "1";
            else if (key == "curve_peak_power_dbm") r.curve.peak_power_dbm = std::stod(val);
            else if (key == "curve_peak_probability") r.curve.peak_probability = std::stod(val);
            else if (key == "curve_width_dbm") r.curve.width_dbm = std::stod(val);
            else if (key == "curve_shape")
                r.curve.shape = val == "gaussian" ? fault::CurveShape::Gaussian
                                                  : fault::CurveShape::Triangular;
            else if (key == "program_hash") r.program_hash = std::stoull(val, nullptr, 16);
            else if (key == "seed") r.seed = std::stoull(val);
            else if (key == "reps") r.reps = uint32_t(std::stoul(val));
            continue;
        }
        if (!header_seen) {
            if (line != kReportHeader)
                throw IoError(origin + ":" + std::to_string(line_no) + ": unexpected header");
            header_seen = true;
            continue;
        }
        ReportCell c;
        double power = 0;
        unsigned long long dns = 0, dcy = 0;
        unsigned runs = 0;
        int n = std::sscanf(line.c_str(), "%llu,%llu,%lf,%u,%u,%u,%u,%u,%u", &dns, &dcy, &power,
                            &runs, &c.counts.n_normal, &c.counts.n_model_fault,
                            &c.counts.n_other_fault, &c.counts.n_crash, &c.counts.n_no_effect);
        if (n != 9)
            throw IoError(origin + ":" + std::to_string(line_no) + ": malformed row");
        c.delay_ns = dns;
        c.delay_cycle = dcy;
        c.power_cdbm = int32_t(power < 0 ? power * 100.0 - 0.5 : power * 100.0 + 0.5);
        if (c.counts.total() != runs)
            throw IoError(origin + ":" + std::to_string(line_no) + ": counts do not sum to n_runs");
        r.cells.push_back(c);
    }
    if (!header_seen) throw IoError(origin + ": no header row found");
    return r;
}

inline CampaignReport import_report(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open report file: " + path);
    return report_from_csv(f, path);
}

} // namespace emfisim::campaign
