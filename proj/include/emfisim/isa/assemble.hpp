#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emfisim/isa/encode.hpp"
#include "emfisim/isa/program.hpp"

namespace emfisim::isa {

struct AsmError : std::runtime_error {
    AsmError(size_t line_no, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + msg),
          line(line_no) {}
    size_t line;
};

namespace asmdetail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(uint8_t(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(uint8_t(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = char(std::tolower(uint8_t(c)));
    return out;
}

inline bool is_ident(std::string_view s) {
    if (s.empty() || (!std::isalpha(uint8_t(s[0])) && s[0] != '_')) return false;
    for (char c : s)
        if (!std::isalnum(uint8_t(c)) && c != '_') return false;
    return true;
}

inline std::optional<int64_t> parse_int(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    bool neg = false;
    if (s[0] == '-' || s[0] == '+') {
        neg = s[0] == '-';
        s.remove_prefix(1);
    }
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    }
    if (s.empty()) return std::nullopt;
    int64_t v = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (base == 16 && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else return std::nullopt;
        v = v * base + d;
        if (v > int64_t(0xFFFFFFFFll)) return std::nullopt;
    }
    return neg ? -v : v;
}

inline std::optional<uint8_t> parse_reg(std::string_view s) {
    std::string t = lower(trim(s));
    if (t == "sp") return 13;
    if (t == "lr") return 14;
    if (t == "pc") return 15;
    if (t.size() >= 2 && t[0] == 'r') {
        auto n = parse_int(t.substr(1));
        if (n && *n >= 0 && *n <= 15) return uint8_t(*n);
    }
    return std::nullopt;
}

inline std::vector<std::string_view> split_operands(std::string_view s) {
    std::vector<std::string_view> out;
    size_t depth = 0, start = 0;
    for (size_t k = 0; k <= s.size(); ++k) {
        if (k == s.size() || (s[k] == ',' && depth == 0)) {
            out.push_back(trim(s.substr(start, k - start)));
            start = k + 1;
        } else if (s[k] == '[') {
            ++depth;
        } else if (s[k] == ']') {
            if (depth) --depth;
        }
    }
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

struct ParsedMnemonic {
    Mnemonic op;
    Condition cond = Condition::Al;
    bool sets_flags = false;
    int width = 0; // 0 auto, 16, 32
};

inline std::optional<ParsedMnemonic> parse_mnemonic(std::string_view tok) {
    std::string m = lower(tok);
    ParsedMnemonic p{};
    if (m.size() > 2 && m.compare(m.size() - 2, 2, ".w") == 0) {
        p.width = 32;
        m.resize(m.size() - 2);
    } else if (m.size() > 2 && m.compare(m.size() - 2, 2, ".n") == 0) {
        p.width = 16;
        m.resize(m.size() - 2);
    }
    auto set = [&](Mnemonic op, bool flags = false) {
        p.op = op;
        p.sets_flags = flags;
        return p;
    };
    if (m == "add") return set(Mnemonic::Add);
    if (m == "adds") return set(Mnemonic::Add, true);
    if (m == "sub") return set(Mnemonic::Sub);
    if (m == "subs") return set(Mnemonic::Sub, true);
    if (m == "mov") return set(Mnemonic::Mov);
    if (m == "movs") return set(Mnemonic::Mov, true);
    if (m == "eor") return set(Mnemonic::Eor);
    if (m == "eors") return set(Mnemonic::Eor, true);
    if (m == "ldr") return set(Mnemonic::Ldr);
    if (m == "str") return set(Mnemonic::Str);
    if (m == "cmp") return set(Mnemonic::Cmp, true);
    if (m == "nop") return set(Mnemonic::Nop);
    if (m == "bkpt") return set(Mnemonic::Bkpt);
    if (m == "b") return set(Mnemonic::B);
    if (m.size() == 3 && m[0] == 'b') {
        static const char* conds[] = {"eq", "ne", "cs", "cc", "mi", "pl", "vs", "vc",
                                      "hi", "ls", "ge", "lt", "gt", "le", "al"};
        for (int k = 0; k < 15; ++k)
            if (m.compare(1, 2, conds[k]) == 0) {
                p.op = Mnemonic::B;
                p.cond = static_cast<Condition>(k);
                return p;
            }
    }
    return std::nullopt;
}

} // namespace asmdetail

// Line-oriented two-pass assembler. Syntax: `;` comments, `label:` labels,
// directives .org/.nop16/.nop32/.word, one instruction per line. Bare
// mnemonics take the narrowest fitting encoding; `.w` and `.n` force a width.
inline Program assemble_text(std::string_view source, uint32_t base_address = 0x0800'0000) {
    using namespace asmdetail;

    struct Item {
        size_t line_no;
        uint32_t address;
        Instruction instr;
        std::string branch_target; // label or number, resolved in pass 2
        bool is_branch = false;
    };

    Program prog;
    prog.base_address = base_address;
    std::vector<Item> items;
    uint32_t addr_cursor = base_address;
    bool emitted = false;

    auto emit_bytes = [&](const std::vector<uint8_t>& b) {
        prog.bytes.insert(prog.bytes.end(), b.begin(), b.end());
        addr_cursor += uint32_t(b.size());
        emitted = true;
    };

    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= source.size()) {
        size_t eol = source.find('\n', pos);
        if (eol == std::string_view::npos) eol = source.size();
        std::string_view line = source.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;

        if (auto cut = line.find(';'); cut != std::string_view::npos)
            line = line.substr(0, cut);
        line = trim(line);

        // Leading labels, possibly followed by an instruction on the same line.
        while (true) {
            size_t colon = line.find(':');
            if (colon == std::string_view::npos) break;
            std::string_view name = trim(line.substr(0, colon));
            if (!is_ident(name)) break;
            if (prog.symbols.count(std::string(name)))
                throw AsmError(line_no, "duplicate label '" + std::string(name) + "'");
            prog.symbols[std::string(name)] = addr_cursor;
            line = trim(line.substr(colon + 1));
        }
        if (line.empty()) continue;

        // Directives.
        if (line[0] == '.') {
            size_t sp = line.find_first_of(" \t");
            std::string dir = lower(line.substr(0, sp));
            std::string_view arg = sp == std::string_view::npos ? "" : trim(line.substr(sp));
            if (dir == ".org") {
                auto v = parse_int(arg);
                if (!v || *v < 0) throw AsmError(line_no, ".org needs an address");
                if (emitted) throw AsmError(line_no, ".org must precede any code");
                if (*v % kLineBytes)
                    throw AsmError(line_no, ".org address must be 16-byte aligned");
                prog.base_address = uint32_t(*v);
                addr_cursor = prog.base_address;
            } else if (dir == ".nop16" || dir == ".nop32") {
                int64_t n = 1;
                if (!arg.empty()) {
                    auto v = parse_int(arg);
                    if (!v || *v < 0) throw AsmError(line_no, dir + " needs a count");
                    n = *v;
                }
                std::vector<uint8_t> pat = dir == ".nop16"
                                               ? std::vector<uint8_t>{0x00, 0xBF}
                                               : std::vector<uint8_t>{0xAF, 0xF3, 0x00, 0x80};
                for (int64_t k = 0; k < n; ++k) emit_bytes(pat);
            } else if (dir == ".word") {
                auto v = parse_int(arg);
                if (!v) throw AsmError(line_no, ".word needs a value");
                uint32_t w = uint32_t(*v);
                emit_bytes({uint8_t(w), uint8_t(w >> 8), uint8_t(w >> 16), uint8_t(w >> 24)});
            } else {
                throw AsmError(line_no, "unknown directive '" + dir + "'");
            }
            continue;
        }

        // Instruction.
        size_t sp = line.find_first_of(" \t");
        std::string_view mtok = sp == std::string_view::npos ? line : line.substr(0, sp);
        std::string_view rest = sp == std::string_view::npos ? "" : trim(line.substr(sp));
        auto pm = parse_mnemonic(mtok);
        if (!pm) throw AsmError(line_no, "unknown mnemonic '" + std::string(mtok) + "'");

        auto ops = split_operands(rest);
        Item item{line_no, addr_cursor, Instruction{}, "", false};
        Instruction& ins = item.instr;
        ins.op = pm->op;
        ins.cond = pm->cond;
        ins.sets_flags = pm->sets_flags;

        auto need = [&](size_t n) {
            if (ops.size() != n)
                throw AsmError(line_no, std::string(mtok) + " expects " + std::to_string(n) +
                                            " operand(s)");
        };
        auto reg = [&](std::string_view s) {
            auto r = parse_reg(s);
            if (!r) throw AsmError(line_no, "bad register '" + std::string(s) + "'");
            return *r;
        };
        auto imm = [&](std::string_view s) {
            std::string_view t = trim(s);
            if (t.empty() || t[0] != '#')
                throw AsmError(line_no, "expected immediate, got '" + std::string(s) + "'");
            auto v = parse_int(t.substr(1));
            if (!v) throw AsmError(line_no, "bad immediate '" + std::string(s) + "'");
            return *v;
        };

        switch (ins.op) {
        case Mnemonic::Nop:
            need(0);
            break;
        case Mnemonic::Bkpt:
            if (ops.empty()) ins.imm = 0;
            else {
                need(1);
                ins.imm = int32_t(imm(ops[0]));
            }
            break;
        case Mnemonic::Add:
        case Mnemonic::Sub:
            need(3);
            ins.rd = reg(ops[0]);
            ins.rn = reg(ops[1]);
            ins.imm = int32_t(imm(ops[2]));
            break;
        case Mnemonic::Mov:
            need(2);
            ins.rd = reg(ops[0]);
            ins.imm = int32_t(imm(ops[1]));
            break;
        case Mnemonic::Cmp:
            need(2);
            ins.rn = reg(ops[0]);
            ins.imm = int32_t(imm(ops[1]));
            break;
        case Mnemonic::Eor:
            need(3);
            ins.rd = reg(ops[0]);
            ins.rn = reg(ops[1]);
            ins.rm = reg(ops[2]);
            break;
        case Mnemonic::Ldr:
        case Mnemonic::Str: {
            need(2);
            std::string_view mem = ops[1];
            if (mem.size() < 2 || mem.front() != '[' || mem.back() != ']')
                throw AsmError(line_no, "expected [rn] or [rn, #off]");
            auto inner = split_operands(mem.substr(1, mem.size() - 2));
            if (inner.empty() || inner.size() > 2)
                throw AsmError(line_no, "expected [rn] or [rn, #off]");
            ins.rd = reg(ops[0]);
            ins.rn = reg(inner[0]);
            ins.imm = inner.size() == 2 ? int32_t(imm(inner[1])) : 0;
            break;
        }
        case Mnemonic::B:
            need(1);
            item.branch_target = std::string(trim(ops[0]));
            item.is_branch = true;
            // Branches are 16-bit in this subset, so addresses are final in pass 1.
            ins.width_bits = 16;
            break;
        }

        if (!item.is_branch) {
            // Width selection: forced by suffix, otherwise the narrowest fitting
            // encoding. The narrow arithmetic forms are flag-setting; a bare
            // mnemonic accepts that (as unified-syntax assemblers do), while an
            // explicit `.w` keeps the non-flag wide form.
            std::vector<uint16_t> hws;
            if (pm->width != 32) {
                Instruction narrow = ins;
                narrow.width_bits = 16;
                bool dp = ins.op == Mnemonic::Add || ins.op == Mnemonic::Sub ||
                          ins.op == Mnemonic::Mov || ins.op == Mnemonic::Eor;
                if (pm->width == 0 && dp) narrow.sets_flags = true;
                if (auto h16 = detail::try_encode16(narrow)) {
                    hws = *h16;
                    ins = narrow;
                } else if (pm->width == 16) {
                    throw AsmError(line_no, "operands not encodable as 16-bit " +
                                                std::string(mtok));
                }
            }
            if (hws.empty()) {
                if (pm->sets_flags && ins.op != Mnemonic::Cmp)
                    throw AsmError(line_no, "no wide flag-setting form for " +
                                                std::string(mtok));
                ins.width_bits = 32;
                ins.sets_flags = ins.op == Mnemonic::Cmp;
                try {
                    hws = encode_halfwords(ins);
                } catch (const EncodeError& e) {
                    throw AsmError(line_no, e.what());
                }
            }
            std::vector<uint8_t> b;
            for (uint16_t hw : hws) {
                b.push_back(uint8_t(hw & 0xFF));
                b.push_back(uint8_t(hw >> 8));
            }
            item.instr = ins;
            emit_bytes(b);
        } else {
            if (pm->width == 32) throw AsmError(line_no, "wide branches not supported");
            emit_bytes({0, 0}); // placeholder, patched in pass 2
        }
        items.push_back(item);
    }

    // Pass 2: resolve branch targets.
    for (auto& it : items) {
        if (!it.is_branch) continue;
        uint32_t target;
        if (auto found = prog.symbols.find(it.branch_target); found != prog.symbols.end()) {
            target = found->second;
        } else if (auto v = parse_int(it.branch_target); v && *v >= 0) {
            target = uint32_t(*v);
        } else {
            throw AsmError(it.line_no, "unknown branch target '" + it.branch_target + "'");
        }
        it.instr.imm = int32_t(target) - int32_t(it.address + 4);
        std::vector<uint16_t> hws;
        try {
            hws = encode_halfwords(it.instr);
        } catch (const EncodeError& e) {
            throw AsmError(it.line_no, e.what());
        }
        uint32_t off = it.address - prog.base_address;
        prog.bytes[off] = uint8_t(hws[0] & 0xFF);
        prog.bytes[off + 1] = uint8_t(hws[0] >> 8);
    }

    require(prog.base_address % kLineBytes == 0, "base address must be line-aligned");
    prog.build_index();
    return prog;
}

} // namespace emfisim::isa
