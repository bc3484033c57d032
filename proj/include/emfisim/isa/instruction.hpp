#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace emfisim::isa {

enum class Mnemonic : uint8_t {
    Add,
    Sub,
    Mov,
    Eor,
    Ldr,
    Str,
    Cmp,
    B,
    Nop,
    Bkpt,
};

enum class Condition : uint8_t {
    Eq = 0x0,
    Ne = 0x1,
    Cs = 0x2,
    Cc = 0x3,
    Mi = 0x4,
    Pl = 0x5,
    Vs = 0x6,
    Vc = 0x7,
    Hi = 0x8,
    Ls = 0x9,
    Ge = 0xA,
    Lt = 0xB,
    Gt = 0xC,
    Le = 0xD,
    Al = 0xE,
};

inline constexpr uint8_t kNoReg = 0xFF;

// One decoded Thumb-2 operation. `imm` holds the expanded immediate for data
// processing ops, the byte offset for ldr/str, and for branches the offset
// relative to the instruction address + 4 (standard Thumb PC bias).
struct Instruction {
    Mnemonic op = Mnemonic::Nop;
    Condition cond = Condition::Al;
    uint8_t rd = kNoReg;
    uint8_t rn = kNoReg;
    uint8_t rm = kNoReg;
    int32_t imm = 0;
    bool sets_flags = false;
    uint8_t width_bits = 16; // 16 or 32
    std::array<uint16_t, 2> raw{0, 0};

    uint32_t size_bytes() const { return width_bits / 8u; }
    bool is_branch() const { return op == Mnemonic::B; }

    // Identity used by the encode/decode round-trip: semantic fields only,
    // raw halfwords are regenerated by the encoder.
    friend bool operator==(const Instruction& a, const Instruction& b) {
        return a.op == b.op && a.cond == b.cond && a.rd == b.rd && a.rn == b.rn &&
               a.rm == b.rm && a.imm == b.imm && a.sets_flags == b.sets_flags &&
               a.width_bits == b.width_bits;
    }
};

inline const char* mnemonic_name(Mnemonic m) {
    switch (m) {
    case Mnemonic::Add: return "add";
    case Mnemonic::Sub: return "sub";
    case Mnemonic::Mov: return "mov";
    case Mnemonic::Eor: return "eor";
    case Mnemonic::Ldr: return "ldr";
    case Mnemonic::Str: return "str";
    case Mnemonic::Cmp: return "cmp";
    case Mnemonic::B: return "b";
    case Mnemonic::Nop: return "nop";
    case Mnemonic::Bkpt: return "bkpt";
    }
    return "?";
}

inline const char* condition_suffix(Condition c) {
    static const char* names[] = {"eq", "ne", "cs", "cc", "mi", "pl", "vs", "vc",
                                  "hi", "ls", "ge", "lt", "gt", "le", ""};
    return names[static_cast<int>(c)];
}

inline std::string reg_name(uint8_t r) {
    if (r == 13) return "sp";
    if (r == 14) return "lr";
    if (r == 15) return "pc";
    return "r" + std::to_string(int(r));
}

} // namespace emfisim::isa
