#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "emfisim/campaign/classify.hpp"

namespace emfisim::campaign {

// (delay x power) sweep parameters. Power steps descend, mirroring the
// measurement protocol: start at 0 dBm with both caches on, 4 dBm otherwise,
// 0.5 dBm steps, 500 repetitions per cell, 1 ns delay steps. Powers are kept
// in centi-dBm so grid points are exact decimals.
struct SweepGrid {
    uint64_t delay_start_ns = 0;
    uint64_t delay_stop_ns = 0; // inclusive
    uint64_t delay_step_ns = 1;
    int32_t power_start_cdbm = 0;    // centi-dBm
    int32_t power_stop_cdbm = -500;  // inclusive bound in the step direction
    int32_t power_step_cdbm = 50;    // magnitude of the step
    uint32_t reps = 500;
    int32_t power_min_cdbm = -500; // sweep bounds, defaults match the rig
    int32_t power_max_cdbm = 900;

    static SweepGrid defaults_for(const memhier::CacheConfig& cfg, uint64_t delay_start,
                                  uint64_t delay_stop) {
        SweepGrid g;
        g.delay_start_ns = delay_start;
        g.delay_stop_ns = delay_stop;
        bool both = cfg.i_cache_enabled && cfg.d_cache_enabled;
        g.power_start_cdbm = both ? 0 : 400;
        g.power_stop_cdbm = g.power_start_cdbm - 500;
        return g;
    }

    std::vector<uint64_t> delays() const {
        std::vector<uint64_t> out;
        for (uint64_t d = delay_start_ns; d <= delay_stop_ns; d += delay_step_ns)
            out.push_back(d);
        return out;
    }

    std::vector<int32_t> powers_cdbm() const {
        std::vector<int32_t> out;
        if (power_start_cdbm >= power_stop_cdbm) {
            for (int32_t p = power_start_cdbm; p >= power_stop_cdbm; p -= power_step_cdbm)
                out.push_back(p);
        } else {
            for (int32_t p = power_start_cdbm; p <= power_stop_cdbm; p += power_step_cdbm)
                out.push_back(p);
        }
        return out;
    }

    void validate() const {
        require(reps >= 1, "sweep: reps must be >= 1");
        require(delay_step_ns > 0, "sweep: delay step must be > 0");
        require(power_step_cdbm > 0, "sweep: power step must be > 0");
        for (int32_t p : powers_cdbm())
            require(p >= power_min_cdbm && p <= power_max_cdbm,
                    "sweep: power outside configured bounds");
    }
};

inline double cdbm_to_dbm(int32_t cdbm) { return double(cdbm) / 100.0; }

struct CellCounts {
    uint32_t n_normal = 0;
    uint32_t n_model_fault = 0;
    uint32_t n_other_fault = 0;
    uint32_t n_crash = 0;
    uint32_t n_no_effect = 0;

    uint32_t total() const {
        return n_normal + n_model_fault + n_other_fault + n_crash + n_no_effect;
    }
    void add(OutcomeClass c) {
        switch (c) {
        case OutcomeClass::Normal: ++n_normal; break;
        case OutcomeClass::ModelFault: ++n_model_fault; break;
        case OutcomeClass::OtherFault: ++n_other_fault; break;
        case OutcomeClass::Crash: ++n_crash; break;
        case OutcomeClass::NoEffect: ++n_no_effect; break;
        }
    }
    friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

struct ReportCell {
    uint64_t delay_ns = 0;
    uint64_t delay_cycle = 0;
    int32_t power_cdbm = 0;
    CellCounts counts;

    friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

struct CampaignReport {
    std::vector<ReportCell> cells; // delay-major, power order as swept
    memhier::CacheConfig config;
    fault::ResponseCurve curve;
    uint64_t program_hash = 0;
    uint64_t seed = 0;
    uint32_t reps = 0;

    friend bool operator==(const CampaignReport&, const CampaignReport&) = default;

    // Highest model-fault rate over delays, per power point.
    struct PowerPeak {
        int32_t power_cdbm;
        double rate;
        uint64_t at_delay_ns;
    };
    std::vector<PowerPeak> per_power_peaks() const {
        std::vector<PowerPeak> out;
        for (const auto& cell : cells) {
            auto it = std::find_if(out.begin(), out.end(),
                                   [&](const PowerPeak& p) { return p.power_cdbm == cell.power_cdbm; });
            double rate = cell.counts.total()
                              ? double(cell.counts.n_model_fault) / cell.counts.total()
                              : 0.0;
            if (it == out.end()) out.push_back({cell.power_cdbm, rate, cell.delay_ns});
            else if (rate > it->rate) *it = {cell.power_cdbm, rate, cell.delay_ns};
        }
        return out;
    }
};

// Full protocol sweep: reps runs per (delay, power) cell. Per-run RNG streams
// derive from (seed, delay index, power index, repetition), so reports are
// identical regardless of worker count or scheduling.
inline CampaignReport sweep(const isa::Program& prog, const sim::RunConfig& config,
                            const SweepGrid& grid, uint64_t seed,
                            const fault::ResponseCurve& curve, uint64_t trigger_cycle = 0,
                            unsigned jobs = 1, const isa::MachineState* initial = nullptr) {
    memhier::validate_campaign_config(config.caches);
    grid.validate();
    GoldenRun golden = golden_run(prog, config, initial);

    const auto delays = grid.delays();
    const auto powers = grid.powers_cdbm();
    CampaignReport report;
    report.config = config.caches;
    report.curve = curve;
    report.program_hash = prog.hash();
    report.seed = seed;
    report.reps = grid.reps;
    report.cells.resize(delays.size() * powers.size());

    auto run_cell = [&](size_t cell_idx) {
        size_t di = cell_idx / powers.size();
        size_t pi = cell_idx % powers.size();
        ReportCell cell;
        cell.delay_ns = delays[di];
        cell.delay_cycle = memhier::ns_to_cycles(delays[di]);
        cell.power_cdbm = powers[pi];
        for (uint32_t rep = 0; rep < grid.reps; ++rep) {
            fault::FaultPulse pulse;
            pulse.delay_ns = delays[di];
            pulse.power_dbm = cdbm_to_dbm(powers[pi]);
            pulse.rng_seed = derive_seed(seed, di, pi, rep);
            auto outcome = run_one(prog, config, golden, pulse, curve, trigger_cycle);
            cell.counts.add(outcome.classification.outcome);
        }
        report.cells[cell_idx] = cell;
    };

    const size_t n_cells = report.cells.size();
    if (jobs <= 1) {
        for (size_t k = 0; k < n_cells; ++k) run_cell(k);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (size_t k = next.fetch_add(1); k < n_cells; k = next.fetch_add(1)) run_cell(k);
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return report;
}

} // namespace emfisim::campaign
