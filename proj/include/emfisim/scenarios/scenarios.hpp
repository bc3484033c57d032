#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emfisim/campaign/classify.hpp"
#include "emfisim/isa/assemble.hpp"

namespace emfisim::scenarios {

// Executable fixture: a program, its initial state, the refill a pulse
// should target, and the expected replay/skip pattern where the region
// around the target is straight-line. `label_offset` maps program ordinals
// to the conventional i1..iN numbering of the payload instructions (padding
// NOPs shift it).
struct Scenario {
    std::string name;
    std::string description;
    isa::Program program;
    isa::MachineState initial_state{0};
    sim::RunConfig run_config;
    uint64_t trigger_cycle = 0;
    uint64_t target_refill_seq = 0; // sequence index of the refill to suppress
    std::vector<size_t> expected_replayed; // program ordinals, empty if n/a
    std::vector<size_t> expected_skipped;
    size_t label_offset = 0;

    std::vector<size_t> as_labels(const std::vector<size_t>& ordinals) const {
        std::vector<size_t> out;
        for (size_t o : ordinals) out.push_back(o - label_offset);
        return out;
    }
};

// Ten-add test sequence: every instruction increments a distinct register, so
// executed order is fully recoverable from the register dump.
inline const char* kAddSequenceSource = R"(
add.w r2, r2, #1
add.w r4, r4, #1
add.w r5, r5, #1
add.w r6, r6, #1
add.w r7, r7, #1
add.w r8, r8, #1
add.w r9, r9, #1
add.w r10, r10, #1
add.w r11, r11, #1
add.w r4, r4, #5
bkpt
)";

// Mask application kernel: state in r1..r4, mask words in RAM behind r5. The
// pairs are placed so one line holds exactly two load/xor pairs.
inline const char* kUnmaskSource = R"(
nop.w
mov.w r5, #0x20000000
ldr.w r0, [r5]
eor.w r1, r1, r0
ldr.w r0, [r5, #4]
eor.w r2, r2, r0
ldr.w r0, [r5, #8]
eor.w r3, r3, r0
ldr.w r0, [r5, #12]
eor.w r4, r4, r0
bkpt
)";

// Counted loop with the counter increment isolated on its own line; r0 logs
// body executions to RAM so extra iterations are observable from outside.
inline const char* kLoopReplaySource = R"(
        movs r0, #0
        movs r1, #0
        mov.w r6, #0x20000000
        nop.w
        nop.w
loop:   add.w r0, r0, #1
        str.w r0, [r6]
        nop.w
        nop.w
        add.w r1, r1, #1
        nop.w
        nop.w
        nop.w
        cmp r1, #3
        blt loop
        bkpt
)";

// Single-skip hardened form: every instruction is idempotent and immediately
// duplicated, so dropping any one of them leaves the result intact.
inline const char* kSkipCountermeasureProtectedSource = R"(
mov.w r6, #0x20000000
mov.w r6, #0x20000000
nop.w
nop.w
mov.w r1, #5
mov.w r1, #5
mov.w r2, #7
mov.w r2, #7
eor.w r3, r1, r2
eor.w r3, r1, r2
str.w r3, [r6]
str.w r3, [r6]
bkpt
)";

inline const char* kSkipCountermeasureUnprotectedSource = R"(
mov.w r6, #0x20000000
nop.w
nop.w
nop.w
mov.w r1, #5
mov.w r2, #7
eor.w r3, r1, r2
str.w r3, [r6]
bkpt
)";

namespace detail {

inline Scenario base_scenario(std::string name, std::string description, const char* source) {
    Scenario s;
    s.name = std::move(name);
    s.description = std::move(description);
    s.program = isa::assemble_text(source);
    s.run_config.ram_size = 256;
    s.initial_state = s.run_config.initial_state(s.program.base_address);
    return s;
}

} // namespace detail

// Alignment class 0: payload starts at a line boundary; class 1: three wide
// NOPs push i2 to a line start, shifting the whole effect by one slot.
inline Scenario scenario_add_sequence(int alignment_class) {
    require(alignment_class == 0 || alignment_class == 1,
            "alignment class must be 0 or 1");
    std::string src = kAddSequenceSource;
    size_t pad = 0;
    if (alignment_class == 1) {
        src = ".nop32 3\n" + src;
        pad = 3;
    }
    Scenario s = detail::base_scenario(
        "add_sequence_" + std::to_string(alignment_class),
        alignment_class == 0 ? "ten wide adds, faulted line replays i1-i4 and skips i5-i8"
                             : "ten wide adds shifted one slot, replays i2-i5 and skips i6-i9",
        src.c_str());
    s.label_offset = pad;
    s.target_refill_seq = alignment_class == 0 ? 1 : 2;
    size_t first_skipped_label = alignment_class == 0 ? 5 : 6;
    for (size_t k = 0; k < 4; ++k) {
        s.expected_replayed.push_back(pad + first_skipped_label - 4 + k);
        s.expected_skipped.push_back(pad + first_skipped_label + k);
    }
    return s;
}

// Masked-state kernel. Golden applies all four mask words; the targeted
// refill replays the first load/xor pair (re-xoring cancels the mask) and
// skips the next two pairs (never masked).
inline Scenario scenario_unmask() {
    Scenario s = detail::base_scenario(
        "unmask", "mask application kernel; one stall leaves most of the state unmasked",
        kUnmaskSource);
    static constexpr uint32_t kState[4] = {0x11111111, 0x22222222, 0x33333333, 0x44444444};
    static constexpr uint32_t kMask[4] = {0xA5A5A5A5, 0x5A5A5A5A, 0xC3C3C3C3, 0x3C3C3C3C};
    for (int k = 0; k < 4; ++k) {
        s.initial_state.regs[1 + k] = kState[k];
        s.initial_state.set_ram_word(uint32_t(4 * k), kMask[k]);
    }
    s.target_refill_seq = 1;
    s.expected_replayed = {1, 2, 3, 4};
    s.expected_skipped = {5, 6, 7, 8};
    return s;
}

inline constexpr uint32_t kUnmaskPlainState[4] = {0x11111111, 0x22222222, 0x33333333,
                                                  0x44444444};

// Loop whose exit depends on a counter increment that sits alone on the
// targeted line. Suppressing that refill repeats the body line instead,
// costing the counter one increment and buying at least one extra iteration.
inline Scenario scenario_loop_replay() {
    Scenario s = detail::base_scenario(
        "loop_replay", "counted loop; stalling the increment line adds an iteration",
        kLoopReplaySource);
    s.target_refill_seq = 2; // first pass over the increment line
    return s;
}

inline constexpr uint32_t kLoopGoldenIterations = 3;

// Hardened and plain versions of a small compute-and-store sequence, used to
// contrast a one-instruction skip against the 4-wide stall.
inline Scenario scenario_skip_countermeasure(bool protected_variant = true) {
    Scenario s = detail::base_scenario(
        protected_variant ? "skip_countermeasure" : "skip_countermeasure_unprotected",
        protected_variant
            ? "duplicated idempotent sequence; survives single skip, not a line stall"
            : "plain sequence; corrupted by either fault",
        protected_variant ? kSkipCountermeasureProtectedSource
                          : kSkipCountermeasureUnprotectedSource);
    if (protected_variant) {
        s.target_refill_seq = 2;
        s.expected_replayed = {5, 6, 7, 8};
        s.expected_skipped = {9, 10, 11, 12};
    } else {
        s.target_refill_seq = 1;
        s.expected_replayed = {1, 2, 3, 4};
        s.expected_skipped = {5, 6, 7, 8};
    }
    return s;
}

inline std::vector<Scenario> all_scenarios() {
    return {scenario_add_sequence(0), scenario_add_sequence(1), scenario_unmask(),
            scenario_loop_replay(), scenario_skip_countermeasure(true),
            scenario_skip_countermeasure(false)};
}

inline Scenario find_scenario(const std::string& name) {
    for (auto& s : all_scenarios())
        if (s.name == name) return s;
    throw ContractError("unknown scenario: " + name);
}

// Golden reference for a scenario.
inline campaign::GoldenRun scenario_golden(const Scenario& s) {
    return campaign::golden_run(s.program, s.run_config, &s.initial_state);
}

// Deterministic stall of the scenario's target refill (probability forced
// to 1), classified against the golden run.
inline campaign::RunOutcome scenario_forced_fault(const Scenario& s,
                                                  const campaign::GoldenRun& golden) {
    fault::FaultPulse pulse;
    pulse.delay_ns = golden.delay_ns_for_refill(s.target_refill_seq, s.trigger_cycle);
    pulse.power_dbm = fault::default_curve(s.run_config.caches).peak_power_dbm;
    pulse.rng_seed = 0;
    return campaign::run_one(s.program, s.run_config, golden, pulse,
                             fault::default_curve(s.run_config.caches), s.trigger_cycle,
                             /*force=*/true);
}

// Reference injector for the countermeasure contrast: executes directly from
// flash with no fetch path and drops exactly one instruction (the pc still
// advances past it). Exists only to compare against the 4-wide stall.
inline isa::MachineState single_skip_run(const isa::Program& prog,
                                         const isa::MachineState& initial,
                                         size_t skip_ordinal, uint64_t max_steps = 100000) {
    isa::MachineState s = initial;
    size_t executed = 0;
    while (!s.halted && executed < max_steps) {
        size_t ord = prog.ordinal_at(s.pc());
        require(ord != 0, "single_skip_run: pc left the decoded instruction index");
        const isa::Instruction& instr = prog.index[ord - 1].instr;
        ++executed;
        if (ord == skip_ordinal) {
            s.set_pc(s.pc() + instr.size_bytes());
            s.cycles += 1;
            continue;
        }
        isa::execute_step(s, instr, prog);
    }
    require(s.halted, "single_skip_run: did not reach a breakpoint");
    return s;
}

} // namespace emfisim::scenarios
