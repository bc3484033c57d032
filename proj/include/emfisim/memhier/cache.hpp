#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "emfisim/common.hpp"

namespace emfisim::memhier {

// Instruction/data cache settings. The prefetch (speculative next-line) stage
// stays off in every modelled configuration; the flag exists so configs can
// be validated against that.
struct CacheConfig {
    bool i_cache_enabled = true;
    bool d_cache_enabled = true;
    bool prefetch_enabled = false;

    friend bool operator==(const CacheConfig&, const CacheConfig&) = default;
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// The d-cache-only combination is not a measured configuration and campaign
// tooling refuses it; prefetch stays disabled everywhere.
inline void validate_campaign_config(const CacheConfig& c) {
    if (c.prefetch_enabled)
        throw ConfigError("prefetch must be disabled in campaign configurations");
    if (!c.i_cache_enabled && c.d_cache_enabled)
        throw ConfigError("d-cache-only configuration is not supported");
}

// Fully associative cache of 128-bit lines with true LRU replacement.
template <size_t NumEntries>
class LruLineCache {
public:
    static constexpr size_t entries = NumEntries;
    static constexpr uint32_t line_bytes = 16;

    struct Entry {
        bool valid = false;
        uint32_t tag = 0; // line base address
        std::array<uint8_t, line_bytes> payload{};
        uint64_t lru_rank = 0; // higher = more recently used
    };

    // Promotes tag to most recently used; true when present.
    bool touch(uint32_t tag) {
        for (auto& e : slots_) {
            if (e.valid && e.tag == tag) {
                e.lru_rank = ++tick_;
                ++hits_;
                return true;
            }
        }
        ++misses_;
        return false;
    }

    bool probe(uint32_t tag) const {
        for (const auto& e : slots_)
            if (e.valid && e.tag == tag) return true;
        return false;
    }

    std::optional<std::array<uint8_t, line_bytes>> lookup(uint32_t tag) {
        for (auto& e : slots_) {
            if (e.valid && e.tag == tag) {
                e.lru_rank = ++tick_;
                ++hits_;
                return e.payload;
            }
        }
        ++misses_;
        return std::nullopt;
    }

    // Victim selection: first empty slot, otherwise the least recently used.
    size_t victim_index() const {
        size_t best = 0;
        uint64_t best_rank = ~0ull;
        for (size_t k = 0; k < slots_.size(); ++k) {
            if (!slots_[k].valid) return k;
            if (slots_[k].lru_rank < best_rank) {
                best_rank = slots_[k].lru_rank;
                best = k;
            }
        }
        return best;
    }

    // Inserts (or refreshes) a line, evicting the LRU victim when full.
    void insert(uint32_t tag, const std::array<uint8_t, line_bytes>& payload) {
        for (auto& e : slots_) {
            if (e.valid && e.tag == tag) {
                e.payload = payload;
                e.lru_rank = ++tick_;
                return;
            }
        }
        Entry& e = slots_[victim_index()];
        e.valid = true;
        e.tag = tag;
        e.payload = payload;
        e.lru_rank = ++tick_;
    }

    void reset() {
        for (auto& e : slots_) e = Entry{};
        tick_ = hits_ = misses_ = 0;
    }

    size_t valid_count() const {
        size_t n = 0;
        for (const auto& e : slots_) n += e.valid;
        return n;
    }

    uint64_t hits() const { return hits_; }
    uint64_t misses() const { return misses_; }
    const Entry& slot(size_t k) const { return slots_[k]; }

private:
    std::vector<Entry> slots_{NumEntries};
    uint64_t tick_ = 0;
    uint64_t hits_ = 0;
    uint64_t misses_ = 0;
};

using ICache = LruLineCache<64>; // 64 x 128-bit instruction lines
using DCache = LruLineCache<8>;  // 8 x 128-bit data lines, not on the fetch path

} // namespace emfisim::memhier
