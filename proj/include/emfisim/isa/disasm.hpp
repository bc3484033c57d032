#pragma once

#include <cstdio>
#include <string>

#include "emfisim/isa/program.hpp"

namespace emfisim::isa {

inline std::string format_imm(int64_t v) {
    char buf[24];
    if (v < 0 || v > 9)
        std::snprintf(buf, sizeof buf, "#0x%llx", static_cast<unsigned long long>(uint32_t(v)));
    else
        std::snprintf(buf, sizeof buf, "#%lld", static_cast<long long>(v));
    return buf;
}

// Assembler-compatible text for one instruction. `address` is needed to print
// absolute branch targets.
inline std::string to_text(const Instruction& i, uint32_t address) {
    const bool wide = i.width_bits == 32;
    std::string m = mnemonic_name(i.op);
    if (i.sets_flags && i.op != Mnemonic::Cmp) m += "s";
    if (i.op == Mnemonic::B) m += condition_suffix(i.cond);
    if (wide && i.op != Mnemonic::Bkpt) m += ".w";

    switch (i.op) {
    case Mnemonic::Nop:
        return m;
    case Mnemonic::Bkpt:
        return m + " " + format_imm(i.imm);
    case Mnemonic::Add:
    case Mnemonic::Sub:
        return m + " " + reg_name(i.rd) + ", " + reg_name(i.rn) + ", " + format_imm(i.imm);
    case Mnemonic::Mov:
        return m + " " + reg_name(i.rd) + ", " + format_imm(i.imm);
    case Mnemonic::Cmp:
        return m + " " + reg_name(i.rn) + ", " + format_imm(i.imm);
    case Mnemonic::Eor:
        return m + " " + reg_name(i.rd) + ", " + reg_name(i.rn) + ", " + reg_name(i.rm);
    case Mnemonic::Ldr:
    case Mnemonic::Str:
        if (i.imm == 0) return m + " " + reg_name(i.rd) + ", [" + reg_name(i.rn) + "]";
        return m + " " + reg_name(i.rd) + ", [" + reg_name(i.rn) + ", " + format_imm(i.imm) +
               "]";
    case Mnemonic::B: {
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%08x", address + 4 + uint32_t(i.imm));
        return m + " " + buf;
    }
    }
    return m;
}

// Full listing: address, raw halfword(s), text. Stops at the first
// undecodable halfword and reports it as a .word so listings stay lossless.
inline std::string disassemble(const Program& prog) {
    std::string out;
    uint32_t addr = prog.base_address;
    uint32_t end = prog.base_address + uint32_t(prog.bytes.size());
    char buf[96];
    while (addr + 2 <= end) {
        uint16_t hws[2] = {prog.flash_halfword(addr), 0};
        size_t n = 1;
        if (is_wide_prefix(hws[0]) && addr + 4 <= end) {
            hws[1] = prog.flash_halfword(addr + 2);
            n = 2;
        }
        try {
            Instruction i = decode(hws, n, addr);
            if (i.width_bits == 32)
                std::snprintf(buf, sizeof buf, "%08x: %04x %04x  %s\n", addr, hws[0], hws[1],
                              to_text(i, addr).c_str());
            else
                std::snprintf(buf, sizeof buf, "%08x: %04x       %s\n", addr, hws[0],
                              to_text(i, addr).c_str());
            out += buf;
            addr += i.size_bytes();
        } catch (const DecodeError&) {
            uint32_t w = uint16_t(hws[0]);
            if (addr + 4 <= end) w |= uint32_t(prog.flash_halfword(addr + 2)) << 16;
            std::snprintf(buf, sizeof buf, "%08x: .word 0x%08x\n", addr, w);
            out += buf;
            addr += 4;
        }
    }
    return out;
}

} // namespace emfisim::isa
