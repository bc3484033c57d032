#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emfisim/fault/curve.hpp"
#include "emfisim/isa/assemble.hpp"
#include "emfisim/isa/execute.hpp"
#include "emfisim/memhier/fetch_path.hpp"

namespace emfisim::sim {

struct RunConfig {
    memhier::CacheConfig caches;
    uint64_t max_cycles = 1'000'000; // runaway guard; campaigns tighten this
    uint32_t ram_size = 1024;
    uint32_t ram_base = 0x2000'0000;

    isa::MachineState initial_state(uint32_t entry_point) const {
        isa::MachineState s(ram_size);
        s.ram_base = ram_base;
        s.set_pc(entry_point);
        return s;
    }
};

enum class RunStatus : uint8_t {
    Halted,        // clean stop at a breakpoint
    Crash,         // decode fault, memory fault, fetch out of image, budget
};

enum class CrashReason : uint8_t {
    None,
    UnsupportedEncoding,
    TruncatedInstruction,
    MemoryFault,
    FetchOutOfImage,
    StaleQueueInvalid,
    CycleBudgetExhausted,
};

inline const char* crash_reason_name(CrashReason r) {
    switch (r) {
    case CrashReason::None: return "none";
    case CrashReason::UnsupportedEncoding: return "unsupported_encoding";
    case CrashReason::TruncatedInstruction: return "truncated_instruction";
    case CrashReason::MemoryFault: return "memory_fault";
    case CrashReason::FetchOutOfImage: return "fetch_out_of_image";
    case CrashReason::StaleQueueInvalid: return "stale_queue_invalid";
    case CrashReason::CycleBudgetExhausted: return "cycle_budget_exhausted";
    }
    return "?";
}

// One executed instruction: where the pc was, where the bytes actually came
// from, and which program ordinal those bytes belong to (0 when the bytes do
// not start an indexed instruction, e.g. mid-instruction stale reads).
struct TraceStep {
    uint32_t pc;
    uint32_t source_address;
    size_t ordinal;
};

struct RunResult {
    isa::MachineState final_state{0};
    RunStatus status = RunStatus::Halted;
    CrashReason crash_reason = CrashReason::None;
    std::string crash_detail;
    std::vector<TraceStep> trace;
    std::vector<memhier::FetchEvent> refill_events;
    uint64_t flash_refills = 0;
    uint64_t cache_refills = 0;
    uint64_t wait_cycles = 0;
    uint64_t instructions_executed = 0;
    bool pulse_consumed = false;
    std::optional<uint64_t> suppressed_refill_seq;

    bool crashed() const { return status == RunStatus::Crash; }

    std::vector<size_t> trace_ordinals() const {
        std::vector<size_t> out;
        out.reserve(trace.size());
        for (const auto& t : trace) out.push_back(t.ordinal);
        return out;
    }
};

// An armed pulse, already resolved against the response curve: `effective`
// says whether the energy roll succeeded. Cycle, not ns, so callers decide
// the trigger reference.
struct ArmedPulse {
    uint64_t armed_cycle = 0;
    bool effective = false;
};

inline ArmedPulse resolve_pulse(const fault::FaultPulse& pulse, const fault::ResponseCurve& curve,
                                uint64_t trigger_cycle, bool force = false) {
    ArmedPulse a;
    a.armed_cycle = trigger_cycle + memhier::ns_to_cycles(pulse.delay_ns);
    a.effective = force || fault::roll_fault(pulse, curve);
    return a;
}

// Fetch/decode/execute loop over the fetch path. Instruction cost is one
// cycle plus any refill wait states; a run ends at a breakpoint, on a crash,
// or when the cycle budget runs out.
class Simulator {
public:
    Simulator(const isa::Program& program, const RunConfig& config)
        : prog_(&program), cfg_(config), fetch_(program, config.caches),
          state_(config.initial_state(program.base_address)) {}

    Simulator(const isa::Program& program, const RunConfig& config, isa::MachineState initial)
        : prog_(&program), cfg_(config), fetch_(program, config.caches),
          state_(std::move(initial)) {}

    void arm(const ArmedPulse& pulse) { fetch_.arm_pulse(pulse.armed_cycle, pulse.effective); }

    isa::MachineState& state() { return state_; }
    const memhier::FetchPath& fetch_path() const { return fetch_; }

    RunResult run() {
        RunResult res;
        auto crash = [&](CrashReason r, const std::string& detail) {
            res.status = RunStatus::Crash;
            res.crash_reason = r;
            res.crash_detail = detail;
        };

        while (!state_.halted) {
            if (state_.cycles >= cfg_.max_cycles) {
                crash(CrashReason::CycleBudgetExhausted,
                      "exceeded " + std::to_string(cfg_.max_cycles) + " cycles");
                break;
            }
            const uint32_t pc0 = state_.pc();
            uint16_t hws[2] = {0, 0};
            uint32_t source = 0;
            size_t n = 1;
            try {
                auto f1 = fetch_.fetch_halfword(pc0, state_.cycles);
                state_.cycles += f1.wait_cycles;
                hws[0] = f1.halfword;
                source = f1.source_address;
                if (isa::is_wide_prefix(hws[0])) {
                    auto f2 = fetch_.fetch_halfword(pc0 + 2, state_.cycles);
                    state_.cycles += f2.wait_cycles;
                    hws[1] = f2.halfword;
                    n = 2;
                }
            } catch (const memhier::OutOfImage& e) {
                crash(CrashReason::FetchOutOfImage, e.what());
                break;
            } catch (const memhier::StalePfqInvalid& e) {
                crash(CrashReason::StaleQueueInvalid, e.what());
                break;
            }

            isa::Instruction instr;
            try {
                instr = isa::decode(hws, n, pc0);
            } catch (const isa::DecodeError& e) {
                crash(e.kind == isa::DecodeErrorKind::TruncatedInstruction
                          ? CrashReason::TruncatedInstruction
                          : CrashReason::UnsupportedEncoding,
                      e.what());
                break;
            }

            res.trace.push_back({pc0, source, prog_->ordinal_at(source)});
            try {
                isa::execute_step(state_, instr, *prog_);
            } catch (const isa::MemoryFault& e) {
                crash(CrashReason::MemoryFault, e.what());
                break;
            }
            ++res.instructions_executed;
        }

        res.final_state = state_;
        res.refill_events = fetch_.refill_events();
        res.flash_refills = fetch_.flash_refills();
        res.cache_refills = fetch_.cache_refills();
        res.wait_cycles = fetch_.total_wait_cycles();
        res.pulse_consumed = fetch_.pulse_consumed();
        res.suppressed_refill_seq = fetch_.suppressed_sequence();
        return res;
    }

private:
    const isa::Program* prog_;
    RunConfig cfg_;
    memhier::FetchPath fetch_;
    isa::MachineState state_;
};

} // namespace emfisim::sim
