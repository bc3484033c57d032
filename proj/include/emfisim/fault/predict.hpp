#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "emfisim/isa/program.hpp"

namespace emfisim::fault {

// Analytical consequence of one suppressed refill: the previous line's
// instructions run again at the skipped line's addresses, the target line is
// never loaded, and execution resumes at the first instruction of the line
// after it. Ordinals are 1-based positions in the program's linear index.
struct FaultOutcomePrediction {
    std::vector<size_t> replayed;
    std::vector<size_t> skipped;
    size_t resume_at = 0;
};

struct PredictionUnavailable : std::runtime_error {
    explicit PredictionUnavailable(const std::string& why)
        : std::runtime_error("prediction unavailable: " + why) {}
};

// Valid for a straight-line region of uniform-width instructions around the
// target line: 4 slots of 32-bit code, or up to 8 slots of 16-bit code.
// Branches or mixed widths in either window make the analytical model
// ambiguous and callers fall back to trace comparison.
inline FaultOutcomePrediction predict(const isa::Program& prog, uint32_t target_line_base) {
    require((target_line_base & (isa::kLineBytes - 1)) == 0,
            "predict: target must be line-aligned");
    if (target_line_base < prog.base_address + isa::kLineBytes)
        throw PredictionUnavailable("no previous line to replay");
    if (!prog.contains(target_line_base))
        throw PredictionUnavailable("target line outside image");

    const uint32_t prev_base = target_line_base - isa::kLineBytes;
    FaultOutcomePrediction out;
    out.replayed = prog.ordinals_in_line(prev_base);
    out.skipped = prog.ordinals_in_line(target_line_base);
    if (out.replayed.empty() || out.skipped.empty())
        throw PredictionUnavailable("window not covered by decoded instructions");

    auto window_uniform = [&](const std::vector<size_t>& ords, uint32_t base) {
        uint32_t expect_addr = base;
        uint8_t width = prog.index[ords.front() - 1].instr.width_bits;
        for (size_t ord : ords) {
            const auto& e = prog.index[ord - 1];
            if (e.instr.is_branch()) throw PredictionUnavailable("branch in window");
            if (e.instr.width_bits != width)
                throw PredictionUnavailable("mixed widths in window");
            if (e.address != expect_addr)
                throw PredictionUnavailable("instruction straddles line boundary");
            expect_addr += e.instr.size_bytes();
        }
        if (expect_addr != base + isa::kLineBytes)
            throw PredictionUnavailable("window not fully populated");
    };
    window_uniform(out.replayed, prev_base);
    window_uniform(out.skipped, target_line_base);

    out.resume_at = out.skipped.back() + 1;
    if (out.resume_at > prog.index.size())
        throw PredictionUnavailable("nothing to resume after the skipped line");
    return out;
}

} // namespace emfisim::fault
