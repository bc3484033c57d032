#include "doctest.h"

#include <algorithm>
#include <vector>

#include "emfisim/isa/assemble.hpp"
#include "emfisim/isa/disasm.hpp"
#include "emfisim/isa/encode.hpp"
#include "emfisim/isa/execute.hpp"

using namespace emfisim;
using namespace emfisim::isa;

namespace {

Instruction decode1(std::initializer_list<uint16_t> hws, uint32_t addr = 0x08000000) {
    std::vector<uint16_t> v(hws);
    return decode(v.data(), v.size(), addr);
}

Instruction wide_add(uint8_t rd, uint8_t rn, int32_t imm) {
    Instruction i;
    i.op = Mnemonic::Add;
    i.rd = rd;
    i.rn = rn;
    i.imm = imm;
    i.width_bits = 32;
    return i;
}

} // namespace

// Reference encodings checked against the ARMv7-M ARM encoding diagrams
// (A7.7.3 ADD immediate T3, A7.7.35 EOR register T2, A7.7.87 NOP T1).
TEST_CASE("decode: known encodings") {
    SUBCASE("add.w r2, r2, #1 is F102 0201") {
        Instruction i = decode1({0xF102, 0x0201});
        CHECK(i.op == Mnemonic::Add);
        CHECK(i.rd == 2);
        CHECK(i.rn == 2);
        CHECK(i.imm == 1);
        CHECK(i.width_bits == 32);
        CHECK(!i.sets_flags);
    }
    SUBCASE("nop is BF00") {
        Instruction i = decode1({0xBF00});
        CHECK(i.op == Mnemonic::Nop);
        CHECK(i.width_bits == 16);
    }
    SUBCASE("eor.w r1, r1, r0 is EA81 0100") {
        Instruction i = decode1({0xEA81, 0x0100});
        CHECK(i.op == Mnemonic::Eor);
        CHECK(i.rd == 1);
        CHECK(i.rn == 1);
        CHECK(i.rm == 0);
        CHECK(i.width_bits == 32);
    }
    SUBCASE("movs r5, #7 is 2507") {
        Instruction i = decode1({0x2507});
        CHECK(i.op == Mnemonic::Mov);
        CHECK(i.rd == 5);
        CHECK(i.imm == 7);
        CHECK(i.sets_flags);
    }
    SUBCASE("bkpt #0 is BE00") {
        Instruction i = decode1({0xBE00});
        CHECK(i.op == Mnemonic::Bkpt);
        CHECK(i.imm == 0);
    }
    SUBCASE("ldr r0, [r5] is 6828") {
        Instruction i = decode1({0x6828});
        CHECK(i.op == Mnemonic::Ldr);
        CHECK(i.rd == 0);
        CHECK(i.rn == 5);
        CHECK(i.imm == 0);
    }
    SUBCASE("beq back by 4 is D0FD") {
        // cond=0000, imm8=0xFD: offset = -6 bytes from pc+4
        Instruction i = decode1({0xD0FD});
        CHECK(i.op == Mnemonic::B);
        CHECK(i.cond == Condition::Eq);
        CHECK(i.imm == -6);
    }
}

TEST_CASE("decode: errors") {
    SUBCASE("truncated wide prefix") {
        uint16_t hw = 0xF102;
        CHECK_THROWS_AS(decode(&hw, 1, 0x08000000), DecodeError);
        try {
            decode(&hw, 1, 0x08000000);
        } catch (const DecodeError& e) {
            CHECK(e.kind == DecodeErrorKind::TruncatedInstruction);
            CHECK(e.address == 0x08000000);
        }
    }
    SUBCASE("unsupported 16-bit encoding") {
        // 0x4780 is BLX r0, not in the subset.
        CHECK_THROWS_AS(decode1({0x4780}), DecodeError);
    }
    SUBCASE("erased flash pattern is not an instruction") {
        CHECK_THROWS_AS(decode1({0xFFFF, 0xFFFF}), DecodeError);
    }
    SUBCASE("wide arithmetic with S=1 is outside the subset") {
        // adds.w r0, r0, #1 : F110 0001
        CHECK_THROWS_AS(decode1({0xF110, 0x0001}), DecodeError);
    }
}

TEST_CASE("encode: known encodings") {
    SUBCASE("add.w r4, r4, #5 is F104 0405") {
        auto hw = encode_halfwords(wide_add(4, 4, 5));
        REQUIRE(hw.size() == 2);
        CHECK(hw[0] == 0xF104);
        CHECK(hw[1] == 0x0405);
    }
    SUBCASE("16-bit nop") {
        Instruction i;
        i.op = Mnemonic::Nop;
        i.width_bits = 16;
        auto b = encode(i);
        REQUIRE(b.size() == 2);
        CHECK(b[0] == 0x00);
        CHECK(b[1] == 0xBF);
    }
    SUBCASE("unencodable immediate") {
        CHECK_THROWS_AS(encode_halfwords(wide_add(0, 0, 0x12345678)), EncodeError);
    }
    SUBCASE("modified immediate splat patterns") {
        CHECK(thumb_compress_imm(0x00AB00AB) == 0x1AB);
        CHECK(thumb_compress_imm(0xAB00AB00) == 0x2AB);
        CHECK(thumb_compress_imm(0xABABABAB) == 0x3AB);
        CHECK(thumb_compress_imm(0x20000000).value() == 0x500);
        CHECK(!thumb_compress_imm(0x12345678).has_value());
        for (uint32_t imm12 = 0; imm12 < 4096; ++imm12) {
            if ((imm12 & 0xC00) == 0 && (imm12 & 0x300) != 0 && (imm12 & 0xFF) == 0)
                continue; // splat of zero byte, not produced by the encoder
            uint32_t v = thumb_expand_imm(imm12);
            auto back = thumb_compress_imm(v);
            REQUIRE(back.has_value());
            CHECK(thumb_expand_imm(*back) == v);
        }
    }
}

TEST_CASE("round-trip: decode(encode(i)) == i across operand subranges") {
    auto roundtrip = [](const Instruction& i) {
        auto hw = encode_halfwords(i);
        Instruction back = decode(hw.data(), hw.size(), 0x08000000);
        REQUIRE(back == i);
    };

    SUBCASE("16-bit arithmetic") {
        for (auto op : {Mnemonic::Add, Mnemonic::Sub}) {
            for (uint8_t rd = 0; rd < 8; ++rd)
                for (uint8_t rn = 0; rn < 8; ++rn)
                    for (int32_t imm = 0; imm <= 7; ++imm) {
                        if (rd == rn) continue; // encoder canonicalizes to T2
                        Instruction i;
                        i.op = op;
                        i.rd = rd;
                        i.rn = rn;
                        i.imm = imm;
                        i.sets_flags = true;
                        i.width_bits = 16;
                        roundtrip(i);
                    }
            for (uint8_t rdn = 0; rdn < 8; ++rdn)
                for (int32_t imm = 0; imm <= 255; ++imm) {
                    Instruction i;
                    i.op = op;
                    i.rd = i.rn = rdn;
                    i.imm = imm;
                    i.sets_flags = true;
                    i.width_bits = 16;
                    roundtrip(i);
                }
        }
    }
    SUBCASE("16-bit mov/cmp/eor/ldr/str") {
        for (uint8_t r = 0; r < 8; ++r)
            for (int32_t imm = 0; imm <= 255; ++imm) {
                Instruction m;
                m.op = Mnemonic::Mov;
                m.rd = r;
                m.imm = imm;
                m.sets_flags = true;
                m.width_bits = 16;
                roundtrip(m);
                Instruction c;
                c.op = Mnemonic::Cmp;
                c.rn = r;
                c.imm = imm;
                c.sets_flags = true;
                c.width_bits = 16;
                roundtrip(c);
            }
        for (uint8_t rdn = 0; rdn < 8; ++rdn)
            for (uint8_t rm = 0; rm < 8; ++rm) {
                Instruction e;
                e.op = Mnemonic::Eor;
                e.rd = e.rn = rdn;
                e.rm = rm;
                e.sets_flags = true;
                e.width_bits = 16;
                roundtrip(e);
            }
        for (auto op : {Mnemonic::Ldr, Mnemonic::Str})
            for (uint8_t rt = 0; rt < 8; ++rt)
                for (uint8_t rn = 0; rn < 8; ++rn)
                    for (int32_t off = 0; off <= 124; off += 4) {
                        Instruction i;
                        i.op = op;
                        i.rd = rt;
                        i.rn = rn;
                        i.imm = off;
                        i.width_bits = 16;
                        roundtrip(i);
                    }
    }
    SUBCASE("branches") {
        for (int cond = 0; cond <= 13; ++cond)
            for (int32_t off = -256; off <= 254; off += 2) {
                Instruction i;
                i.op = Mnemonic::B;
                i.cond = static_cast<Condition>(cond);
                i.imm = off;
                i.width_bits = 16;
                roundtrip(i);
            }
        for (int32_t off = -2048; off <= 2046; off += 2) {
            Instruction i;
            i.op = Mnemonic::B;
            i.imm = off;
            i.width_bits = 16;
            roundtrip(i);
        }
    }
    SUBCASE("wide data processing over all modified immediates") {
        std::vector<uint32_t> values;
        for (uint32_t imm12 = 0; imm12 < 4096; ++imm12)
            values.push_back(thumb_expand_imm(imm12));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (uint32_t v : values) {
            Instruction a = wide_add(3, 9, int32_t(v));
            roundtrip(a);
            Instruction s = a;
            s.op = Mnemonic::Sub;
            roundtrip(s);
            Instruction m;
            m.op = Mnemonic::Mov;
            m.rd = 11;
            m.imm = int32_t(v);
            m.width_bits = 32;
            roundtrip(m);
            Instruction c;
            c.op = Mnemonic::Cmp;
            c.rn = 4;
            c.imm = int32_t(v);
            c.sets_flags = true;
            c.width_bits = 32;
            roundtrip(c);
        }
    }
    SUBCASE("wide register/memory forms") {
        for (uint8_t rd = 0; rd <= 12; ++rd)
            for (uint8_t rn = 0; rn <= 12; ++rn)
                for (uint8_t rm = 0; rm <= 12; ++rm) {
                    Instruction e;
                    e.op = Mnemonic::Eor;
                    e.rd = rd;
                    e.rn = rn;
                    e.rm = rm;
                    e.width_bits = 32;
                    roundtrip(e);
                }
        for (auto op : {Mnemonic::Ldr, Mnemonic::Str})
            for (uint8_t rt = 0; rt <= 12; ++rt)
                for (int32_t off = 0; off <= 0xFFF; off += 7) {
                    Instruction i;
                    i.op = op;
                    i.rd = rt;
                    i.rn = uint8_t((rt + 1) % 13);
                    i.imm = off;
                    i.width_bits = 32;
                    roundtrip(i);
                }
    }
}

TEST_CASE("execute: single step semantics") {
    Program prog; // empty flash, data ops only
    prog.base_address = 0x08000000;

    SUBCASE("add.w r2, r2, #1 from zero") {
        MachineState s(64);
        s.set_pc(0x08000000);
        execute_step(s, wide_add(2, 2, 1), prog);
        CHECK(s.regs[2] == 1);
        CHECK(s.pc() == 0x08000004);
        CHECK(s.cycles == 1);
    }
    SUBCASE("eor zeroes an equal pair and is self-inverse") {
        MachineState s(64);
        s.regs[0] = 0xAA;
        s.regs[1] = 0xAA;
        Instruction e;
        e.op = Mnemonic::Eor;
        e.rd = 1;
        e.rn = 1;
        e.rm = 0;
        e.width_bits = 32;
        execute_step(s, e, prog);
        CHECK(s.regs[1] == 0);
        s.regs[1] = 0x1234;
        s.regs[0] = 0xFF00;
        execute_step(s, e, prog);
        uint32_t once = s.regs[1];
        execute_step(s, e, prog);
        CHECK(once == (0x1234u ^ 0xFF00u));
        CHECK(s.regs[1] == 0x1234);
    }
    SUBCASE("unconditional branch changes only pc") {
        MachineState s(64);
        s.set_pc(0x08000010);
        MachineState before = s;
        Instruction b;
        b.op = Mnemonic::B;
        b.imm = 8; // target = pc + 4 + 8
        b.width_bits = 16;
        execute_step(s, b, prog);
        CHECK(s.pc() == 0x0800001C);
        CHECK(s.regs[0] == before.regs[0]);
        CHECK(s.apsr == before.apsr);
    }
    SUBCASE("conditional branch follows cmp flags") {
        MachineState s(64);
        s.set_pc(0x08000000);
        s.regs[1] = 1;
        Instruction c;
        c.op = Mnemonic::Cmp;
        c.rn = 1;
        c.imm = 3;
        c.sets_flags = true;
        c.width_bits = 16;
        execute_step(s, c, prog);
        CHECK(s.apsr.n); // 1 - 3 < 0
        Instruction blt;
        blt.op = Mnemonic::B;
        blt.cond = Condition::Lt;
        blt.imm = -10;
        blt.width_bits = 16;
        uint32_t pc0 = s.pc();
        execute_step(s, blt, prog);
        CHECK(s.pc() == pc0 + 4 - 10);
    }
    SUBCASE("bkpt halts and pins the pc") {
        MachineState s(64);
        s.set_pc(0x08000008);
        Instruction bk;
        bk.op = Mnemonic::Bkpt;
        bk.width_bits = 16;
        execute_step(s, bk, prog);
        CHECK(s.halted);
        CHECK(s.pc() == 0x08000008);
    }
    SUBCASE("memory fault outside ram and flash") {
        MachineState s(64);
        Instruction ld;
        ld.op = Mnemonic::Ldr;
        ld.rd = 0;
        ld.rn = 1;
        ld.imm = 0;
        ld.width_bits = 16;
        s.regs[1] = 0xDEAD0000;
        CHECK_THROWS_AS(execute_step(s, ld, prog), MemoryFault);
    }
    SUBCASE("ldr/str round-trip through ram") {
        MachineState s(64);
        Instruction st;
        st.op = Mnemonic::Str;
        st.rd = 3;
        st.rn = 1;
        st.imm = 8;
        st.width_bits = 16;
        s.regs[1] = s.ram_base;
        s.regs[3] = 0xCAFEBABE;
        execute_step(s, st, prog);
        Instruction ld = st;
        ld.op = Mnemonic::Ldr;
        ld.rd = 4;
        execute_step(s, ld, prog);
        CHECK(s.regs[4] == 0xCAFEBABE);
    }
}

TEST_CASE("execute: pc discipline and determinism properties") {
    // Non-branch steps advance the pc by exactly the instruction size.
    Program prog;
    Rng rng(0xD15C1BED);
    for (int trial = 0; trial < 200; ++trial) {
        MachineState s(64);
        s.set_pc(0x08000000 + uint32_t(rng.next_u64() % 64) * 2);
        Instruction i;
        switch (rng.next_u64() % 4) {
        case 0: i = wide_add(uint8_t(rng.next_u64() % 12), uint8_t(rng.next_u64() % 12),
                             int32_t(rng.next_u64() % 255));
            break;
        case 1:
            i.op = Mnemonic::Mov;
            i.rd = uint8_t(rng.next_u64() % 8);
            i.imm = int32_t(rng.next_u64() % 255);
            i.sets_flags = true;
            i.width_bits = 16;
            break;
        case 2:
            i.op = Mnemonic::Nop;
            i.width_bits = 16;
            break;
        default:
            i.op = Mnemonic::Eor;
            i.rd = i.rn = uint8_t(rng.next_u64() % 8);
            i.rm = uint8_t(rng.next_u64() % 8);
            i.sets_flags = true;
            i.width_bits = 16;
            break;
        }
        uint32_t pc0 = s.pc();
        MachineState twin = s;
        execute_step(s, i, prog);
        execute_step(twin, i, prog);
        CHECK(s.pc() - pc0 == i.size_bytes());
        CHECK(s.arch_equal(twin));
        CHECK(s.cycles == twin.cycles);
    }
}
