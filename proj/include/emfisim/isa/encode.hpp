#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "emfisim/isa/decode.hpp"
#include "emfisim/isa/instruction.hpp"

namespace emfisim::isa {

struct EncodeError : std::runtime_error {
    explicit EncodeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inverse of ThumbExpandImm: canonical encoding of a 32-bit value as a
// modified immediate, or nullopt when not representable.
inline std::optional<uint32_t> thumb_compress_imm(uint32_t v) {
    if (v <= 0xFFu) return v;
    uint32_t b = v & 0xFFu;
    if (b != 0) {
        if (v == ((b << 16) | b)) return 0x100u | b;
        if (v == ((b << 24) | (b << 16) | (b << 8) | b)) return 0x300u | b;
    }
    uint32_t b2 = (v >> 8) & 0xFFu;
    if (b2 != 0 && v == ((b2 << 24) | (b2 << 8))) return 0x200u | b2;
    for (uint32_t rot = 8; rot <= 31; ++rot) {
        uint32_t unrot = (v << rot) | (v >> (32 - rot)); // ROL undoes ROR
        if (unrot >= 0x80u && unrot <= 0xFFu) return (rot << 7) | (unrot & 0x7Fu);
    }
    return std::nullopt;
}

namespace detail {

inline bool low_reg(uint8_t r) { return r < 8; }

inline std::optional<std::vector<uint16_t>> try_encode16(const Instruction& i) {
    auto one = [](uint16_t hw) { return std::vector<uint16_t>{hw}; };
    switch (i.op) {
    case Mnemonic::Nop:
        if (i.sets_flags) return std::nullopt;
        return one(0xBF00);
    case Mnemonic::Bkpt:
        if (i.imm < 0 || i.imm > 0xFF) return std::nullopt;
        return one(uint16_t(0xBE00 | i.imm));
    case Mnemonic::Add:
    case Mnemonic::Sub: {
        // 16-bit arithmetic always sets flags (outside IT blocks).
        if (!i.sets_flags || !low_reg(i.rd) || !low_reg(i.rn) || i.imm < 0)
            return std::nullopt;
        uint16_t base = i.op == Mnemonic::Sub ? 0x0200 : 0x0000;
        if (i.rd == i.rn && i.imm <= 0xFF) // T2
            return one(uint16_t(0x3000 | (base << 2) | (i.rd << 8) | i.imm));
        if (i.imm <= 7) // T1
            return one(uint16_t(0x1C00 | base | (uint16_t(i.imm) << 6) | (i.rn << 3) | i.rd));
        return std::nullopt;
    }
    case Mnemonic::Mov:
        if (!i.sets_flags || !low_reg(i.rd) || i.imm < 0 || i.imm > 0xFF)
            return std::nullopt;
        return one(uint16_t(0x2000 | (i.rd << 8) | i.imm));
    case Mnemonic::Cmp:
        if (!low_reg(i.rn) || i.imm < 0 || i.imm > 0xFF) return std::nullopt;
        return one(uint16_t(0x2800 | (i.rn << 8) | i.imm));
    case Mnemonic::Eor:
        if (!i.sets_flags || i.rd != i.rn || !low_reg(i.rd) || !low_reg(i.rm))
            return std::nullopt;
        return one(uint16_t(0x4040 | (i.rm << 3) | i.rd));
    case Mnemonic::Ldr:
    case Mnemonic::Str: {
        if (!low_reg(i.rd) || !low_reg(i.rn)) return std::nullopt;
        if (i.imm < 0 || i.imm > 124 || (i.imm & 3)) return std::nullopt;
        uint16_t base = i.op == Mnemonic::Ldr ? 0x6800 : 0x6000;
        return one(uint16_t(base | ((uint16_t(i.imm) / 4) << 6) | (i.rn << 3) | i.rd));
    }
    case Mnemonic::B: {
        if (i.imm & 1) return std::nullopt;
        if (i.cond == Condition::Al) {
            if (i.imm < -2048 || i.imm > 2046) return std::nullopt; // T2
            return one(uint16_t(0xE000 | ((uint32_t(i.imm) >> 1) & 0x7FF)));
        }
        if (i.imm < -256 || i.imm > 254) return std::nullopt; // T1
        return one(uint16_t(0xD000 | (uint16_t(static_cast<uint8_t>(int(i.cond))) << 8) |
                            ((uint32_t(i.imm) >> 1) & 0xFF)));
    }
    default: return std::nullopt;
    }
}

inline std::optional<std::vector<uint16_t>> try_encode32(const Instruction& i) {
    auto two = [](uint16_t a, uint16_t b) { return std::vector<uint16_t>{a, b}; };
    auto dp_ok = [](uint8_t r) { return r != kNoReg && r != 13 && r != 15; };
    auto mi = [&](uint16_t op_s, uint8_t rn, uint8_t rd) -> std::optional<std::vector<uint16_t>> {
        auto imm12 = thumb_compress_imm(static_cast<uint32_t>(i.imm));
        if (!imm12) return std::nullopt;
        uint16_t hw1 = uint16_t(0xF000 | (((*imm12 >> 11) & 1) << 10) | (op_s << 4) | rn);
        uint16_t hw2 = uint16_t((((*imm12 >> 8) & 7) << 12) | (uint16_t(rd) << 8) |
                                (*imm12 & 0xFF));
        return two(hw1, hw2);
    };
    switch (i.op) {
    case Mnemonic::Nop:
        if (i.sets_flags) return std::nullopt;
        return two(0xF3AF, 0x8000);
    case Mnemonic::Add:
        if (i.sets_flags || !dp_ok(i.rd) || !dp_ok(i.rn)) return std::nullopt;
        return mi(0b1000'0, i.rn, i.rd);
    case Mnemonic::Sub:
        if (i.sets_flags || !dp_ok(i.rd) || !dp_ok(i.rn)) return std::nullopt;
        return mi(0b1101'0, i.rn, i.rd);
    case Mnemonic::Mov:
        if (i.sets_flags || !dp_ok(i.rd)) return std::nullopt;
        return mi(0b0010'0, 0xF, i.rd);
    case Mnemonic::Cmp:
        if (!dp_ok(i.rn)) return std::nullopt;
        return mi(0b1101'1, i.rn, 0xF);
    case Mnemonic::Eor:
        if (i.sets_flags || !dp_ok(i.rd) || !dp_ok(i.rn) || !dp_ok(i.rm))
            return std::nullopt;
        return two(uint16_t(0xEA80 | i.rn), uint16_t((uint16_t(i.rd) << 8) | i.rm));
    case Mnemonic::Ldr:
    case Mnemonic::Str: {
        if (!dp_ok(i.rd) || !dp_ok(i.rn)) return std::nullopt;
        if (i.imm < 0 || i.imm > 0xFFF) return std::nullopt;
        uint16_t hw1 = uint16_t((i.op == Mnemonic::Ldr ? 0xF8D0 : 0xF8C0) | i.rn);
        return two(hw1, uint16_t((uint16_t(i.rd) << 12) | i.imm));
    }
    default: return std::nullopt;
    }
}

} // namespace detail

// Halfword encoding honouring the requested width. encode() then decode() is
// the identity on (mnemonic, operands, flags, width).
inline std::vector<uint16_t> encode_halfwords(const Instruction& instr) {
    std::optional<std::vector<uint16_t>> hw;
    if (instr.width_bits == 16)
        hw = detail::try_encode16(instr);
    else if (instr.width_bits == 32)
        hw = detail::try_encode32(instr);
    else
        throw EncodeError("width must be 16 or 32");
    if (!hw)
        throw EncodeError(std::string("operands not encodable as ") +
                          std::to_string(instr.width_bits) + "-bit " +
                          mnemonic_name(instr.op));
    return *hw;
}

inline std::vector<uint8_t> encode(const Instruction& instr) {
    std::vector<uint8_t> out;
    for (uint16_t hw : encode_halfwords(instr)) {
        out.push_back(uint8_t(hw & 0xFF));
        out.push_back(uint8_t(hw >> 8));
    }
    return out;
}

} // namespace emfisim::isa
