#pragma once

#include <cstdint>
#include <vector>

#include "emfisim/sim/simulator.hpp"

namespace emfisim::campaign {

struct GoldenRunError : std::runtime_error {
    explicit GoldenRunError(const std::string& msg)
        : std::runtime_error("golden run failed: " + msg) {}
};

// Fault-free reference execution. Everything later classification compares
// against is snapshotted here; it must end cleanly at a breakpoint.
struct GoldenRun {
    isa::MachineState initial_state{0};
    isa::MachineState final_state{0};
    std::vector<sim::TraceStep> trace;
    std::vector<memhier::FetchEvent> refill_events;
    uint64_t total_cycles = 0;
    uint64_t flash_refills = 0;
    uint64_t cache_refills = 0;
    std::vector<uint8_t> functional_output; // designated RAM region snapshot

    bool straight_line() const {
        size_t prev = 0;
        for (const auto& t : trace) {
            if (t.ordinal == 0 || t.ordinal <= prev) return false;
            prev = t.ordinal;
        }
        return true;
    }

    std::vector<size_t> trace_ordinals() const {
        std::vector<size_t> out;
        out.reserve(trace.size());
        for (const auto& t : trace) out.push_back(t.ordinal);
        return out;
    }

    // Smallest pulse delay (ns after the trigger) that lands on the refill
    // with the given sequence index, assuming the trigger sits at cycle 0.
    uint64_t delay_ns_for_refill(uint64_t sequence_index, uint64_t trigger_cycle = 0) const {
        for (const auto& ev : refill_events) {
            if (ev.sequence_index == sequence_index) {
                require(ev.cycle >= trigger_cycle, "refill precedes trigger");
                uint64_t want = ev.cycle - trigger_cycle;
                // Land strictly after the previous refill so only this one matches.
                uint64_t ns = memhier::cycles_to_ns(want);
                require(memhier::ns_to_cycles(ns) == want, "cycle/ns conversion drift");
                return ns;
            }
        }
        throw ContractError("no refill with requested sequence index");
    }
};

inline GoldenRun golden_run(const isa::Program& prog, const sim::RunConfig& config,
                            const isa::MachineState* initial = nullptr) {
    memhier::validate_campaign_config(config.caches);
    sim::Simulator s = initial ? sim::Simulator(prog, config, *initial)
                               : sim::Simulator(prog, config);
    GoldenRun g;
    g.initial_state = initial ? *initial : config.initial_state(prog.base_address);
    sim::RunResult r = s.run();
    if (r.crashed())
        throw GoldenRunError(std::string(sim::crash_reason_name(r.crash_reason)) + ": " +
                             r.crash_detail);
    g.final_state = r.final_state;
    g.trace = r.trace;
    g.refill_events = r.refill_events;
    g.total_cycles = r.final_state.cycles;
    g.flash_refills = r.flash_refills;
    g.cache_refills = r.cache_refills;
    g.functional_output = r.final_state.ram;
    return g;
}

} // namespace emfisim::campaign
