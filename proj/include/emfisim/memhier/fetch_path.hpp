#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emfisim/isa/program.hpp"
#include "emfisim/memhier/cache.hpp"

namespace emfisim::memhier {

inline constexpr uint32_t kLineBytes = isa::kLineBytes;
inline constexpr uint64_t kFlashRefillWaitCycles = 6; // 128-bit line preload
inline constexpr uint64_t kCpuHz = 168'000'000;       // 168 MHz core clock

// Campaign delays are given in nanoseconds; the observable granularity is the
// CPU cycle, so delays floor to a cycle index (1 cycle = 1000/168 ns).
inline uint64_t ns_to_cycles(uint64_t ns) { return ns * 168 / 1000; }

// Smallest nanosecond delay that lands on a given cycle.
inline uint64_t cycles_to_ns(uint64_t cycles) { return (cycles * 1000 + 167) / 168; }

enum class FetchKind : uint8_t {
    PfqHit,
    RefillFromCache,
    RefillFromFlash,
};

inline const char* fetch_kind_name(FetchKind k) {
    switch (k) {
    case FetchKind::PfqHit: return "pfq_hit";
    case FetchKind::RefillFromCache: return "refill_cache";
    case FetchKind::RefillFromFlash: return "refill_flash";
    }
    return "?";
}

struct FetchEvent {
    uint64_t sequence_index = 0; // ordinal among refill events since reset
    FetchKind kind = FetchKind::PfqHit;
    uint32_t line_base = 0;
    uint64_t cycle = 0;
    bool suppressed = false;
};

struct OutOfImage : std::runtime_error {
    explicit OutOfImage(uint32_t addr)
        : std::runtime_error("fetch outside flash image at 0x" + hex32(addr)), address(addr) {}
    uint32_t address;
};

// A refill was suppressed while the queue still held nothing valid; the CPU
// would be consuming undriven bus lines. Callers classify this as a crash.
struct StalePfqInvalid : std::runtime_error {
    StalePfqInvalid() : std::runtime_error("refill suppressed with no stale line in the queue") {}
};

// The 4x32-bit instruction buffer between the CPU and program memory. Every
// instruction the CPU executes is served from here. `base` is the line the
// queue claims to hold; `payload_base` is where the payload bytes actually
// came from. They differ only after a disturbed refill, which updates the
// tag but leaves the previous payload in place.
struct PrefetchQueue {
    std::array<uint8_t, kLineBytes> payload{};
    uint32_t base = 0;
    uint32_t payload_base = 0;
    bool valid = false;

    bool stale() const { return valid && base != payload_base; }
};

struct FetchResult {
    uint16_t halfword = 0;
    FetchKind kind = FetchKind::PfqHit;
    uint64_t wait_cycles = 0;
    uint32_t source_address = 0; // flash address the bytes really came from
};

// Flash line reads, the prefetch queue and the instruction cache, with wait
// state accounting. Owns the armed-pulse bookkeeping: a single pulse targets
// the first refill event at or after its cycle and, when effective, leaves
// the queue payload stale.
class FetchPath {
public:
    FetchPath(const isa::Program& program, const CacheConfig& config)
        : prog_(&program), cfg_(config) {
        if (cfg_.prefetch_enabled)
            throw ConfigError("speculative prefetch is not modelled; disable it");
    }

    const CacheConfig& config() const { return cfg_; }

    // Arms the fault pulse: the first refill whose cycle is >= armed_cycle is
    // the target. `effective` false models a pulse whose energy rolled below
    // the response threshold; it is consumed without suppressing anything.
    void arm_pulse(uint64_t armed_cycle, bool effective) {
        armed_cycle_ = armed_cycle;
        armed_effective_ = effective;
        pulse_consumed_ = false;
        suppressed_seq_.reset();
    }

    bool pulse_consumed() const { return pulse_consumed_; }
    std::optional<uint64_t> suppressed_sequence() const { return suppressed_seq_; }

    // 128-bit line read straight from flash. addr must be line-aligned.
    std::array<uint8_t, kLineBytes> line_read(uint32_t addr) const {
        require((addr & (kLineBytes - 1)) == 0, "line_read: address not line-aligned");
        require(prog_->contains(addr), "line_read: address out of image");
        std::array<uint8_t, kLineBytes> out{};
        for (uint32_t k = 0; k < kLineBytes; ++k) out[k] = prog_->flash_byte(addr + k);
        return out;
    }

    // Serves one halfword at pc. On a queue miss a refill happens first:
    // cache hit costs nothing, a flash read costs the 6-cycle preload and
    // (when the i-cache is on) inserts the line, evicting the LRU victim.
    FetchResult fetch_halfword(uint32_t pc, uint64_t now_cycles) {
        require((pc & 1) == 0, "fetch_halfword: pc must be halfword-aligned");
        if (!prog_->contains(pc)) throw OutOfImage(pc);
        const uint32_t line = isa::line_base_of(pc);

        FetchResult res;
        if (!(pfq_.valid && pfq_.base == line)) {
            res.kind = refill(line, now_cycles);
            res.wait_cycles = res.kind == FetchKind::RefillFromFlash ? kFlashRefillWaitCycles : 0;
        }
        const uint32_t offset = pc & (kLineBytes - 1);
        res.halfword = uint16_t(pfq_.payload[offset]) |
                       (uint16_t(pfq_.payload[offset + 1]) << 8);
        res.source_address = pfq_.payload_base + offset;
        return res;
    }

    const PrefetchQueue& pfq() const { return pfq_; }
    const ICache& icache() const { return icache_; }
    const DCache& dcache() const { return dcache_; }
    const std::vector<FetchEvent>& refill_events() const { return events_; }

    uint64_t flash_refills() const { return flash_refills_; }
    uint64_t cache_refills() const { return cache_refills_; }
    uint64_t total_wait_cycles() const { return wait_cycles_; }

private:
    FetchKind refill(uint32_t line, uint64_t now_cycles) {
        FetchEvent ev;
        ev.sequence_index = next_seq_++;
        ev.line_base = line;
        ev.cycle = now_cycles;

        bool suppress = false;
        if (armed_cycle_ && !pulse_consumed_ && now_cycles >= *armed_cycle_) {
            pulse_consumed_ = true;
            suppress = armed_effective_;
        }

        if (suppress) {
            // The read from flash (or cache) to the queue is disturbed: the
            // tag moves on, the payload does not, and the cache is left
            // untouched. The skipped line's bytes never enter the queue.
            ev.kind = (cfg_.i_cache_enabled && icache_.probe(line))
                          ? FetchKind::RefillFromCache
                          : FetchKind::RefillFromFlash;
            ev.suppressed = true;
            suppressed_seq_ = ev.sequence_index;
            if (!pfq_.valid) {
                events_.push_back(ev);
                account(ev);
                throw StalePfqInvalid();
            }
            pfq_.base = line;
        } else {
            std::optional<std::array<uint8_t, kLineBytes>> from_cache;
            if (cfg_.i_cache_enabled) from_cache = icache_.lookup(line);
            ev.kind = from_cache ? FetchKind::RefillFromCache : FetchKind::RefillFromFlash;
            auto payload = from_cache ? *from_cache : line_read(line);
            if (!from_cache && cfg_.i_cache_enabled) icache_.insert(line, payload);
            pfq_.payload = payload;
            pfq_.base = line;
            pfq_.payload_base = line;
            pfq_.valid = true;
        }

        events_.push_back(ev);
        account(ev);
        return ev.kind;
    }

    void account(const FetchEvent& ev) {
        if (ev.kind == FetchKind::RefillFromFlash) {
            ++flash_refills_;
            wait_cycles_ += kFlashRefillWaitCycles;
        } else {
            ++cache_refills_;
        }
    }

    const isa::Program* prog_;
    CacheConfig cfg_;
    PrefetchQueue pfq_;
    ICache icache_;
    DCache dcache_;
    std::vector<FetchEvent> events_;
    uint64_t next_seq_ = 0;
    uint64_t flash_refills_ = 0;
    uint64_t cache_refills_ = 0;
    uint64_t wait_cycles_ = 0;

    std::optional<uint64_t> armed_cycle_;
    bool armed_effective_ = false;
    bool pulse_consumed_ = false;
    std::optional<uint64_t> suppressed_seq_;
};

// Event trace CSV: sequence_index, kind, line_base (hex), cycle.
inline std::string refill_events_csv(const std::vector<FetchEvent>& events) {
    std::string out = "sequence_index,kind,line_base,cycle\n";
    char buf[96];
    for (const auto& ev : events) {
        std::snprintf(buf, sizeof buf, "%llu,%s,0x%08x,%llu\n",
                      static_cast<unsigned long long>(ev.sequence_index),
                      fetch_kind_name(ev.kind), ev.line_base,
                      static_cast<unsigned long long>(ev.cycle));
        out += buf;
    }
    return out;
}

} // namespace emfisim::memhier
