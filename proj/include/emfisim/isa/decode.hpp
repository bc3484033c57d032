#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "emfisim/common.hpp"
#include "emfisim/isa/instruction.hpp"

namespace emfisim::isa {

enum class DecodeErrorKind : uint8_t {
    UnsupportedEncoding,
    TruncatedInstruction,
};

struct DecodeError : std::runtime_error {
    DecodeError(DecodeErrorKind k, uint32_t addr, uint32_t raw_bits)
        : std::runtime_error(k == DecodeErrorKind::TruncatedInstruction
                                 ? "truncated 32-bit instruction at 0x" + hex32(addr)
                                 : "unsupported encoding 0x" + hex32(raw_bits) + " at 0x" +
                                       hex32(addr)),
          kind(k), address(addr), raw(raw_bits) {}
    DecodeErrorKind kind;
    uint32_t address;
    uint32_t raw;
};

// First halfword of a 32-bit encoding has bits [15:11] in {0b11101, 0b11110, 0b11111}
// (ARMv7-M ARM A5.1).
inline bool is_wide_prefix(uint16_t hw) {
    return (hw & 0xF800u) >= 0xE800u;
}

// ThumbExpandImm (ARMv7-M ARM A5.3.2): 12-bit i:imm3:imm8 modified immediate.
inline uint32_t thumb_expand_imm(uint32_t imm12) {
    uint32_t imm8 = imm12 & 0xFFu;
    if ((imm12 & 0xC00u) == 0) {
        switch ((imm12 >> 8) & 0x3u) {
        case 0: return imm8;
        case 1: return (imm8 << 16) | imm8;
        case 2: return (imm8 << 24) | (imm8 << 8);
        default: return (imm8 << 24) | (imm8 << 16) | (imm8 << 8) | imm8;
        }
    }
    uint32_t rot = (imm12 >> 7) & 0x1Fu; // 8..31
    uint32_t val = 0x80u | (imm12 & 0x7Fu);
    return (val >> rot) | (val << (32 - rot));
}

namespace detail {

inline int32_t sign_extend(uint32_t v, unsigned bits) {
    uint32_t m = 1u << (bits - 1);
    return static_cast<int32_t>((v ^ m) - m);
}

inline Instruction make16(Mnemonic op, uint16_t raw) {
    Instruction i;
    i.op = op;
    i.width_bits = 16;
    i.raw = {raw, 0};
    return i;
}

inline Instruction make32(Mnemonic op, uint16_t hw1, uint16_t hw2) {
    Instruction i;
    i.op = op;
    i.width_bits = 32;
    i.raw = {hw1, hw2};
    return i;
}

inline std::optional<Instruction> decode16(uint16_t hw) {
    // Hints and breakpoints.
    if (hw == 0xBF00u) return make16(Mnemonic::Nop, hw);
    if ((hw & 0xFF00u) == 0xBE00u) { // BKPT #imm8 (A7.7.17)
        Instruction i = make16(Mnemonic::Bkpt, hw);
        i.imm = hw & 0xFFu;
        return i;
    }
    switch (hw >> 11) {
    case 0b00011: { // ADDS/SUBS Rd, Rn, #imm3 (A7.7.3/A7.7.174 T1)
        bool sub = (hw >> 9) & 1;
        if (((hw >> 10) & 1) == 0) return std::nullopt; // register form, out of subset
        Instruction i = make16(sub ? Mnemonic::Sub : Mnemonic::Add, hw);
        i.rd = hw & 7;
        i.rn = (hw >> 3) & 7;
        i.imm = (hw >> 6) & 7;
        i.sets_flags = true;
        return i;
    }
    case 0b00100: { // MOVS Rd, #imm8 (A7.7.76 T1)
        Instruction i = make16(Mnemonic::Mov, hw);
        i.rd = (hw >> 8) & 7;
        i.imm = hw & 0xFF;
        i.sets_flags = true;
        return i;
    }
    case 0b00101: { // CMP Rn, #imm8 (A7.7.27 T1)
        Instruction i = make16(Mnemonic::Cmp, hw);
        i.rn = (hw >> 8) & 7;
        i.imm = hw & 0xFF;
        i.sets_flags = true;
        return i;
    }
    case 0b00110:
    case 0b00111: { // ADDS/SUBS Rdn, #imm8 (T2)
        bool sub = (hw >> 11) & 1;
        Instruction i = make16(sub ? Mnemonic::Sub : Mnemonic::Add, hw);
        i.rd = i.rn = (hw >> 8) & 7;
        i.imm = hw & 0xFF;
        i.sets_flags = true;
        return i;
    }
    case 0b01101:
    case 0b01100: { // LDR/STR Rt, [Rn, #imm5<<2] (A7.7.42/A7.7.158 T1)
        bool load = (hw >> 11) & 1;
        Instruction i = make16(load ? Mnemonic::Ldr : Mnemonic::Str, hw);
        i.rd = hw & 7;
        i.rn = (hw >> 3) & 7;
        i.imm = ((hw >> 6) & 0x1F) * 4;
        return i;
    }
    default: break;
    }
    if ((hw & 0xFFC0u) == 0x4040u) { // EORS Rdn, Rm (A7.7.35 T1)
        Instruction i = make16(Mnemonic::Eor, hw);
        i.rd = i.rn = hw & 7;
        i.rm = (hw >> 3) & 7;
        i.sets_flags = true;
        return i;
    }
    if ((hw & 0xF000u) == 0xD000u) { // B<c> #imm8 (A7.7.12 T1)
        uint32_t cond = (hw >> 8) & 0xF;
        if (cond >= 0xE) return std::nullopt; // 0b1110 UDF, 0b1111 SVC
        Instruction i = make16(Mnemonic::B, hw);
        i.cond = static_cast<Condition>(cond);
        i.imm = sign_extend((hw & 0xFFu) << 1, 9);
        return i;
    }
    if ((hw & 0xF800u) == 0xE000u) { // B #imm11 (T2)
        Instruction i = make16(Mnemonic::B, hw);
        i.imm = sign_extend((hw & 0x7FFu) << 1, 12);
        return i;
    }
    return std::nullopt;
}

inline bool dp_reg_ok(uint8_t r) { return r != 13 && r != 15; }

inline std::optional<Instruction> decode32(uint16_t hw1, uint16_t hw2) {
    if (hw1 == 0xF3AFu && hw2 == 0x8000u) // NOP.W (A7.7.87 T2)
        return make32(Mnemonic::Nop, hw1, hw2);

    // Data processing, modified immediate: 11110 i 0 op(4) S Rn | 0 imm3 Rd imm8
    // (A5.3.1). Subset: ADD/SUB/MOV with S=0 and CMP (S=1, Rd=1111).
    if ((hw1 & 0xFA00u) == 0xF000u && (hw2 & 0x8000u) == 0) {
        uint32_t op = (hw1 >> 5) & 0xFu;
        bool s = (hw1 >> 4) & 1;
        uint8_t rn = hw1 & 0xFu;
        uint8_t rd = (hw2 >> 8) & 0xFu;
        uint32_t imm12 = (((hw1 >> 10) & 1u) << 11) | (((hw2 >> 12) & 7u) << 8) | (hw2 & 0xFFu);
        uint32_t imm32 = thumb_expand_imm(imm12);
        if (op == 0b1000 && !s && dp_reg_ok(rd) && dp_reg_ok(rn)) { // ADD.W T3
            Instruction i = make32(Mnemonic::Add, hw1, hw2);
            i.rd = rd; i.rn = rn; i.imm = static_cast<int32_t>(imm32);
            return i;
        }
        if (op == 0b1101 && !s && dp_reg_ok(rd) && dp_reg_ok(rn)) { // SUB.W T3
            Instruction i = make32(Mnemonic::Sub, hw1, hw2);
            i.rd = rd; i.rn = rn; i.imm = static_cast<int32_t>(imm32);
            return i;
        }
        if (op == 0b1101 && s && rd == 0xF && dp_reg_ok(rn)) { // CMP.W T2
            Instruction i = make32(Mnemonic::Cmp, hw1, hw2);
            i.rn = rn; i.imm = static_cast<int32_t>(imm32);
            i.sets_flags = true;
            return i;
        }
        if (op == 0b0010 && !s && rn == 0xF && dp_reg_ok(rd)) { // MOV.W T2
            Instruction i = make32(Mnemonic::Mov, hw1, hw2);
            i.rd = rd; i.imm = static_cast<int32_t>(imm32);
            return i;
        }
        return std::nullopt;
    }

    // EOR (register) T2, shift-none only: 1110101 0100 S Rn | (0) imm3 Rd imm2 ty Rm.
    if ((hw1 & 0xFFE0u) == 0xEA80u && (hw1 & 0x10u) == 0) {
        if ((hw2 & 0x70F0u) != 0) return std::nullopt; // shifted forms out of subset
        uint8_t rn = hw1 & 0xFu;
        uint8_t rd = (hw2 >> 8) & 0xFu;
        uint8_t rm = hw2 & 0xFu;
        if (!dp_reg_ok(rd) || !dp_reg_ok(rn) || !dp_reg_ok(rm)) return std::nullopt;
        Instruction i = make32(Mnemonic::Eor, hw1, hw2);
        i.rd = rd; i.rn = rn; i.rm = rm;
        return i;
    }

    // LDR/STR (immediate) T3: 1111100 0 1 10 1 Rn | Rt imm12 (A7.7.42/A7.7.158).
    if ((hw1 & 0xFFE0u) == 0xF8C0u) {
        bool load = (hw1 >> 4) & 1;
        uint8_t rn = hw1 & 0xFu;
        uint8_t rt = (hw2 >> 12) & 0xFu;
        if (rn == 15 || rt == 15 || rn == 13 || rt == 13) return std::nullopt;
        Instruction i = make32(load ? Mnemonic::Ldr : Mnemonic::Str, hw1, hw2);
        i.rd = rt; i.rn = rn; i.imm = hw2 & 0xFFFu;
        return i;
    }

    return std::nullopt;
}

} // namespace detail

// Decodes one instruction from one or two halfwords. `n_halfwords` is how many
// are available; a wide prefix with only one available raises TruncatedInstruction.
inline Instruction decode(const uint16_t* halfwords, size_t n_halfwords, uint32_t address) {
    require(n_halfwords >= 1, "decode: need at least one halfword");
    uint16_t hw1 = halfwords[0];
    if (is_wide_prefix(hw1)) {
        if (n_halfwords < 2)
            throw DecodeError(DecodeErrorKind::TruncatedInstruction, address, hw1);
        uint16_t hw2 = halfwords[1];
        if (auto i = detail::decode32(hw1, hw2)) return *i;
        throw DecodeError(DecodeErrorKind::UnsupportedEncoding, address,
                          (uint32_t(hw1) << 16) | hw2);
    }
    if (auto i = detail::decode16(hw1)) return *i;
    throw DecodeError(DecodeErrorKind::UnsupportedEncoding, address, hw1);
}

} // namespace emfisim::isa
