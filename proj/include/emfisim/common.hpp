#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace emfisim {

// Contract violation. Thrown instead of assert() so precondition failures
// are observable in tests and surface with a message in release builds.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw ContractError(msg);
}

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// splitmix64. Small, portable, deterministic across platforms; used for all
// stochastic draws so campaign results do not depend on the C++ runtime's
// distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) {
        if (p <= 0.0) { next_u64(); return false; }
        if (p >= 1.0) { next_u64(); return true; }
        return next_double() < p;
    }

private:
    uint64_t state_;
};

// Stream derivation: mixes a base seed with lane indices so every run of a
// campaign gets an independent, schedule-invariant stream.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    Rng mix(base ^ (a * 0x8CB92BA72F3D8DD7ull) ^ (b * 0xD6E8FEB86659FD93ull) ^
            (c * 0xA3F58F17B9E49B5Dull));
    return mix.next_u64();
}

inline uint64_t fnv1a64(const uint8_t* data, size_t n, uint64_t h = 0xCBF29CE484222325ull) {
    for (size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::string hex32(uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

inline std::string hex16(uint16_t v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%04x", v);
    return buf;
}

} // namespace emfisim
