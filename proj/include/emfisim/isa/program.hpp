#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "emfisim/isa/decode.hpp"

namespace emfisim::isa {

inline constexpr uint32_t kLineBytes = 16; // 128-bit flash line

// Flat flash image. Reads past the image tail but inside the last touched
// line return 0xFF, like erased flash; those bytes decode to nothing and a
// run that walks into them ends as a crash.
struct Program {
    uint32_t base_address = 0x0800'0000;
    std::vector<uint8_t> bytes;
    std::map<std::string, uint32_t> symbols;

    struct IndexEntry {
        uint32_t address;
        Instruction instr;
    };
    // Linear decode of the image, built by build_index(). Ordinals are
    // 1-based positions in this list.
    std::vector<IndexEntry> index;

    uint32_t padded_size() const {
        return uint32_t((bytes.size() + kLineBytes - 1) / kLineBytes * kLineBytes);
    }
    uint32_t line_count() const { return padded_size() / kLineBytes; }
    uint32_t end_address() const { return base_address + padded_size(); }

    bool contains(uint32_t addr) const {
        return addr >= base_address && addr < end_address();
    }

    uint8_t flash_byte(uint32_t addr) const {
        require(contains(addr), "flash_byte: address out of image");
        uint32_t off = addr - base_address;
        return off < bytes.size() ? bytes[off] : 0xFF;
    }

    uint16_t flash_halfword(uint32_t addr) const {
        return uint16_t(flash_byte(addr)) | (uint16_t(flash_byte(addr + 1)) << 8);
    }

    uint64_t hash() const {
        uint64_t h = fnv1a64(bytes.data(), bytes.size());
        uint8_t b[4] = {uint8_t(base_address), uint8_t(base_address >> 8),
                        uint8_t(base_address >> 16), uint8_t(base_address >> 24)};
        return fnv1a64(b, 4, h);
    }

    // Decodes from the image start until the bytes stop decoding. Images that
    // embed raw data after the code simply end the index there.
    void build_index() {
        index.clear();
        uint32_t addr = base_address;
        uint32_t end = base_address + uint32_t(bytes.size());
        while (addr + 2 <= end) {
            uint16_t hws[2] = {flash_halfword(addr), 0};
            size_t n = 1;
            if (is_wide_prefix(hws[0])) {
                if (addr + 4 > end) break;
                hws[1] = flash_halfword(addr + 2);
                n = 2;
            }
            Instruction instr;
            try {
                instr = decode(hws, n, addr);
            } catch (const DecodeError&) {
                break;
            }
            index.push_back({addr, instr});
            addr += instr.size_bytes();
        }
    }

    // 1-based ordinal of the instruction starting at addr, 0 if none does.
    size_t ordinal_at(uint32_t addr) const {
        size_t lo = 0, hi = index.size();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (index[mid].address < addr)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < index.size() && index[lo].address == addr) return lo + 1;
        return 0;
    }

    // Ordinals of instructions that start within [line_base, line_base + 16).
    std::vector<size_t> ordinals_in_line(uint32_t line_base) const {
        std::vector<size_t> out;
        for (size_t k = 0; k < index.size(); ++k) {
            uint32_t a = index[k].address;
            if (a >= line_base && a < line_base + kLineBytes) out.push_back(k + 1);
        }
        return out;
    }
};

inline uint32_t line_base_of(uint32_t addr) { return addr & ~(kLineBytes - 1); }

} // namespace emfisim::isa
