#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "emfisim/isa/instruction.hpp"
#include "emfisim/isa/program.hpp"

namespace emfisim::isa {

struct Apsr {
    bool n = false, z = false, c = false, v = false;
    friend bool operator==(const Apsr&, const Apsr&) = default;
};

struct MemoryFault : std::runtime_error {
    MemoryFault(uint32_t addr, bool write)
        : std::runtime_error(std::string(write ? "store" : "load") +
                             " outside mapped memory at 0x" + hex32(addr)),
          address(addr), is_write(write) {}
    uint32_t address;
    bool is_write;
};

// Architectural state: r0-r12, sp, lr, pc, flags, cycle counter and a flat
// byte-addressed data RAM. pc is regs[15] and always points at the next
// instruction to execute.
struct MachineState {
    std::array<uint32_t, 16> regs{};
    Apsr apsr;
    uint64_t cycles = 0;
    uint32_t ram_base = 0x2000'0000;
    std::vector<uint8_t> ram;
    bool halted = false;

    explicit MachineState(uint32_t ram_size = 1024) : ram(ram_size, 0) {}

    uint32_t pc() const { return regs[15]; }
    void set_pc(uint32_t v) { regs[15] = v; }

    bool in_ram(uint32_t addr, uint32_t n = 1) const {
        return addr >= ram_base && addr + n <= ram_base + ram.size();
    }

    uint32_t ram_word(uint32_t offset) const {
        require(offset + 4 <= ram.size(), "ram_word: offset out of range");
        return uint32_t(ram[offset]) | (uint32_t(ram[offset + 1]) << 8) |
               (uint32_t(ram[offset + 2]) << 16) | (uint32_t(ram[offset + 3]) << 24);
    }

    void set_ram_word(uint32_t offset, uint32_t v) {
        require(offset + 4 <= ram.size(), "set_ram_word: offset out of range");
        ram[offset] = uint8_t(v);
        ram[offset + 1] = uint8_t(v >> 8);
        ram[offset + 2] = uint8_t(v >> 16);
        ram[offset + 3] = uint8_t(v >> 24);
    }

    // Register, flag and RAM equality; the cycle counter is timing, not
    // architecture, and is compared separately where it matters.
    bool arch_equal(const MachineState& o) const {
        return regs == o.regs && apsr == o.apsr && ram == o.ram && halted == o.halted;
    }
};

inline bool condition_passed(Condition c, const Apsr& f) {
    switch (c) {
    case Condition::Eq: return f.z;
    case Condition::Ne: return !f.z;
    case Condition::Cs: return f.c;
    case Condition::Cc: return !f.c;
    case Condition::Mi: return f.n;
    case Condition::Pl: return !f.n;
    case Condition::Vs: return f.v;
    case Condition::Vc: return !f.v;
    case Condition::Hi: return f.c && !f.z;
    case Condition::Ls: return !f.c || f.z;
    case Condition::Ge: return f.n == f.v;
    case Condition::Lt: return f.n != f.v;
    case Condition::Gt: return !f.z && f.n == f.v;
    case Condition::Le: return f.z || f.n != f.v;
    case Condition::Al: return true;
    }
    return true;
}

namespace detail {

struct AddResult {
    uint32_t value;
    bool carry, overflow;
};

inline AddResult add_with_carry(uint32_t a, uint32_t b, bool carry_in) {
    uint64_t u = uint64_t(a) + b + (carry_in ? 1 : 0);
    int64_t s = int64_t(int32_t(a)) + int32_t(b) + (carry_in ? 1 : 0);
    uint32_t r = uint32_t(u);
    return {r, u != r, s != int32_t(r)};
}

// Data access window: RAM read/write, flash read-only. Anything else faults.
inline uint32_t load_word(const MachineState& s, const Program& prog, uint32_t addr) {
    if (s.in_ram(addr, 4)) return s.ram_word(addr - s.ram_base);
    if (prog.contains(addr) && prog.contains(addr + 3)) {
        uint32_t v = 0;
        for (int k = 3; k >= 0; --k) v = (v << 8) | prog.flash_byte(addr + uint32_t(k));
        return v;
    }
    throw MemoryFault(addr, false);
}

inline void store_word(MachineState& s, uint32_t addr, uint32_t v) {
    if (!s.in_ram(addr, 4)) throw MemoryFault(addr, true);
    s.set_ram_word(addr - s.ram_base, v);
}

} // namespace detail

// One architectural step. The pc advances by the instruction size unless the
// instruction branches; BKPT halts and leaves the pc on itself, which is the
// observation point for post-run register dumps. Cost model: one cycle per
// instruction; fetch wait states are accounted by the fetch path, not here.
inline void execute_step(MachineState& s, const Instruction& i, const Program& prog) {
    require(!s.halted, "execute_step: machine is halted");
    const uint32_t pc0 = s.pc();
    uint32_t next_pc = pc0 + i.size_bytes();
    auto& f = s.apsr;

    switch (i.op) {
    case Mnemonic::Nop:
        break;
    case Mnemonic::Bkpt:
        s.halted = true;
        next_pc = pc0;
        break;
    case Mnemonic::Add:
    case Mnemonic::Sub: {
        bool sub = i.op == Mnemonic::Sub;
        auto r = detail::add_with_carry(s.regs[i.rn], sub ? ~uint32_t(i.imm) : uint32_t(i.imm),
                                        sub);
        s.regs[i.rd] = r.value;
        if (i.sets_flags) {
            f.n = r.value >> 31;
            f.z = r.value == 0;
            f.c = r.carry;
            f.v = r.overflow;
        }
        break;
    }
    case Mnemonic::Mov:
        s.regs[i.rd] = uint32_t(i.imm);
        if (i.sets_flags) {
            f.n = s.regs[i.rd] >> 31;
            f.z = s.regs[i.rd] == 0;
        }
        break;
    case Mnemonic::Eor:
        s.regs[i.rd] = s.regs[i.rn] ^ s.regs[i.rm];
        if (i.sets_flags) {
            f.n = s.regs[i.rd] >> 31;
            f.z = s.regs[i.rd] == 0;
        }
        break;
    case Mnemonic::Cmp: {
        auto r = detail::add_with_carry(s.regs[i.rn], ~uint32_t(i.imm), true);
        f.n = r.value >> 31;
        f.z = r.value == 0;
        f.c = r.carry;
        f.v = r.overflow;
        break;
    }
    case Mnemonic::Ldr:
        s.regs[i.rd] = detail::load_word(s, prog, s.regs[i.rn] + uint32_t(i.imm));
        break;
    case Mnemonic::Str:
        detail::store_word(s, s.regs[i.rn] + uint32_t(i.imm), s.regs[i.rd]);
        break;
    case Mnemonic::B:
        if (condition_passed(i.cond, f)) next_pc = pc0 + 4 + uint32_t(i.imm);
        break;
    }

    s.set_pc(next_pc);
    s.cycles += 1;
}

// Value-semantics wrapper, convenient in tests.
inline MachineState execute_step_copy(MachineState s, const Instruction& i,
                                      const Program& prog) {
    execute_step(s, i, prog);
    return s;
}

} // namespace emfisim::isa
