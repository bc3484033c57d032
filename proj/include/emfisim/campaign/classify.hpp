#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "emfisim/campaign/golden.hpp"
#include "emfisim/fault/predict.hpp"

namespace emfisim::campaign {

enum class OutcomeClass : uint8_t {
    Normal,     // final architectural state equals the golden run
    ModelFault, // matches the predicted replay/skip reordering
    OtherFault, // state deviates but not in the modelled shape
    Crash,      // decode/memory fault, fetch escape, or budget exhaustion
    NoEffect,   // the pulse never coincided with a refill
};

inline const char* outcome_name(OutcomeClass c) {
    switch (c) {
    case OutcomeClass::Normal: return "normal";
    case OutcomeClass::ModelFault: return "model_fault";
    case OutcomeClass::OtherFault: return "other_fault";
    case OutcomeClass::Crash: return "crash";
    case OutcomeClass::NoEffect: return "no_effect";
    }
    return "?";
}

// Replay/skip windows recovered from an executed trace. Present when the
// trace contains exactly one stale-read episode.
struct FaultObservation {
    std::vector<size_t> replayed;
    std::vector<size_t> skipped;
    size_t resume_at = 0;
    uint32_t skipped_line_base = 0;
};

// Structural detector: a model fault reads one full line's worth of pc
// addresses out of the previous line's bytes and is clean everywhere else.
// Works for loops as well since it only inspects pc/source pairs.
inline std::optional<FaultObservation> detect_replay_skip(const isa::Program& prog,
                                                          const std::vector<sim::TraceStep>& trace) {
    size_t begin = trace.size(), end = 0;
    for (size_t k = 0; k < trace.size(); ++k) {
        if (trace[k].pc != trace[k].source_address) {
            if (begin == trace.size()) begin = k;
            end = k + 1;
        }
    }
    if (begin == trace.size()) return std::nullopt;

    // One contiguous stale episode, everything after it clean again.
    for (size_t k = begin; k < end; ++k)
        if (trace[k].pc == trace[k].source_address) return std::nullopt;

    const uint32_t line = isa::line_base_of(trace[begin].pc);
    uint32_t expect_pc = line;
    for (size_t k = begin; k < end; ++k) {
        if (trace[k].pc != expect_pc) return std::nullopt;
        if (trace[k].source_address != trace[k].pc - isa::kLineBytes) return std::nullopt;
        if (trace[k].ordinal == 0) return std::nullopt;
        expect_pc += prog.index[trace[k].ordinal - 1].instr.size_bytes();
    }
    if (expect_pc != line + isa::kLineBytes) return std::nullopt;
    if (end >= trace.size()) return std::nullopt; // must resume normally
    if (trace[end].pc != expect_pc) return std::nullopt;

    FaultObservation obs;
    obs.skipped_line_base = line;
    for (size_t k = begin; k < end; ++k) obs.replayed.push_back(trace[k].ordinal);
    obs.skipped = prog.ordinals_in_line(line);
    obs.resume_at = trace[end].ordinal;
    return obs;
}

// Reordered ordinal sequence a straight-line golden trace would take under
// the predicted fault: prefix, the previous line again, then the suffix from
// the resume point.
inline std::vector<size_t> predicted_trace(const GoldenRun& golden,
                                           const fault::FaultOutcomePrediction& p) {
    std::vector<size_t> out;
    for (size_t ord : golden.trace_ordinals()) {
        if (ord >= p.skipped.front()) break;
        out.push_back(ord);
    }
    out.insert(out.end(), p.replayed.begin(), p.replayed.end());
    for (size_t ord : golden.trace_ordinals())
        if (ord >= p.resume_at) out.push_back(ord);
    return out;
}

struct Classification {
    OutcomeClass outcome = OutcomeClass::Normal;
    std::optional<FaultObservation> observation;
};

// Classification of one run against its golden reference. Precedence:
// a pulse that never met a refill is NoEffect; crashes are Crash; a final
// architectural state equal to golden is Normal (the reference harness only
// sees register/memory dumps); then the modelled replay/skip shape; anything
// else is OtherFault.
inline Classification classify_run(const isa::Program& prog, const GoldenRun& golden,
                                   const sim::RunResult& run) {
    Classification c;
    if (!run.pulse_consumed) {
        c.outcome = OutcomeClass::NoEffect;
        return c;
    }
    if (run.crashed()) {
        c.outcome = OutcomeClass::Crash;
        return c;
    }
    if (run.final_state.arch_equal(golden.final_state)) {
        c.outcome = OutcomeClass::Normal;
        return c;
    }

    c.observation = detect_replay_skip(prog, run.trace);
    if (c.observation) {
        bool shape_ok = true;
        // Cross-check against the analytical prediction when it applies.
        try {
            auto p = fault::predict(prog, c.observation->skipped_line_base);
            shape_ok = p.replayed == c.observation->replayed &&
                       p.skipped == c.observation->skipped;
            if (shape_ok && golden.straight_line())
                shape_ok = run.trace_ordinals() == predicted_trace(golden, p);
        } catch (const fault::PredictionUnavailable&) {
            // Trace-level detection alone decides.
        }
        if (shape_ok) {
            c.outcome = OutcomeClass::ModelFault;
            return c;
        }
    }
    c.outcome = OutcomeClass::OtherFault;
    return c;
}

// One faulted execution against an existing golden reference.
struct RunOutcome {
    sim::RunResult result;
    Classification classification;
};

inline RunOutcome run_one(const isa::Program& prog, const sim::RunConfig& config,
                          const GoldenRun& golden, const fault::FaultPulse& pulse,
                          const fault::ResponseCurve& curve, uint64_t trigger_cycle = 0,
                          bool force = false) {
    sim::RunConfig rc = config;
    rc.max_cycles = std::max<uint64_t>(10 * golden.total_cycles, 1000);
    sim::Simulator s(prog, rc, golden.initial_state);
    s.arm(sim::resolve_pulse(pulse, curve, trigger_cycle, force));
    RunOutcome out;
    out.result = s.run();
    out.classification = classify_run(prog, golden, out.result);
    return out;
}

} // namespace emfisim::campaign
