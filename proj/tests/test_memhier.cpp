#include "doctest.h"

#include <set>
#include <string>

#include "emfisim/campaign/golden.hpp"
#include "emfisim/isa/assemble.hpp"
#include "emfisim/memhier/fetch_path.hpp"
#include "support/lru_oracle.hpp"
#include "support/reference_exec.hpp"

using namespace emfisim;
using namespace emfisim::memhier;

namespace {

isa::Program nop_lines(size_t n_lines) {
    std::string src = ".nop32 " + std::to_string(n_lines * 4) + "\nbkpt\n";
    return isa::assemble_text(src);
}

} // namespace

TEST_CASE("lru cache: against the list-based model") {
    ICache cache;
    lru_oracle::ListLru model(ICache::entries);
    Rng rng(0x10CA10CA);
    std::array<uint8_t, 16> payload{};
    for (int step = 0; step < 20000; ++step) {
        uint32_t tag = uint32_t(rng.next_u64() % 96) * 16; // 96 tags over 64 slots
        if (rng.next_u64() % 2) {
            CHECK(cache.touch(tag) == model.touch(tag));
        } else {
            bool had = model.contains(tag);
            model.insert(tag);
            CHECK(cache.probe(tag) == had);
            cache.insert(tag, payload);
        }
        CHECK(cache.valid_count() == model.size());
        // Everything the model holds, the cache holds.
        if (step % 997 == 0)
            for (uint32_t t = 0; t < 96; ++t)
                CHECK(cache.probe(t * 16) == model.contains(t * 16));
    }
}

TEST_CASE("lru cache: fill then overflow evicts the first-inserted line") {
    ICache cache;
    std::array<uint8_t, 16> payload{};
    for (uint32_t k = 0; k < 64; ++k) cache.insert(k * 16, payload);
    CHECK(cache.valid_count() == 64);
    cache.insert(64 * 16, payload);
    CHECK(cache.valid_count() == 64);
    CHECK(!cache.probe(0));
    CHECK(cache.probe(16));
    CHECK(cache.probe(64 * 16));
}

TEST_CASE("lru cache: a touched entry survives the next eviction round") {
    ICache cache;
    std::array<uint8_t, 16> payload{};
    for (uint32_t k = 0; k < 64; ++k) cache.insert(k * 16, payload);
    CHECK(cache.touch(0));
    cache.insert(64 * 16, payload); // now the victim is tag 16, not 0
    CHECK(cache.probe(0));
    CHECK(!cache.probe(16));
}

TEST_CASE("lru cache: victim of an empty cache is the first empty slot") {
    ICache cache;
    CHECK(cache.victim_index() == 0);
    std::array<uint8_t, 16> payload{};
    cache.insert(0x100, payload);
    CHECK(cache.victim_index() == 1);
}

TEST_CASE("fetch path: line_read") {
    isa::Program p = isa::assemble_text(std::string("add.w r2, r2, #1\n") + ".word 0x11223344\n" +
                                        ".nop32 3\n.nop16 2\n"); // 24 bytes
    FetchPath fp(p, CacheConfig{});
    SUBCASE("first line matches the image bytes") {
        auto line = fp.line_read(p.base_address);
        for (size_t k = 0; k < 16; ++k) CHECK(line[k] == p.bytes[k]);
    }
    SUBCASE("last full line pads with erased-flash bytes") {
        auto line = fp.line_read(p.base_address + 16);
        for (size_t k = 0; k < 8; ++k) CHECK(line[k] == p.bytes[16 + k]);
        for (size_t k = 8; k < 16; ++k) CHECK(line[k] == 0xFF);
    }
    SUBCASE("unaligned address violates the precondition") {
        CHECK_THROWS_AS(fp.line_read(p.base_address + 2), ContractError);
    }
    SUBCASE("out of image") {
        CHECK_THROWS_AS(fp.line_read(p.base_address + 64), ContractError);
    }
}

TEST_CASE("fetch path: hit/refill sequence on straight-line code") {
    isa::Program p = nop_lines(2); // 2 lines of wide nops + bkpt on line 2
    CacheConfig cfg;
    cfg.i_cache_enabled = false;
    FetchPath fp(p, cfg);

    // First fetch ever: queue invalid, cache off -> flash refill, 6 waits.
    auto f0 = fp.fetch_halfword(p.base_address, 0);
    CHECK(f0.kind == FetchKind::RefillFromFlash);
    CHECK(f0.wait_cycles == 6);

    // Sequential fetch within the same line: queue hit, no wait.
    auto f1 = fp.fetch_halfword(p.base_address + 2, 6);
    CHECK(f1.kind == FetchKind::PfqHit);
    CHECK(f1.wait_cycles == 0);
    auto f2 = fp.fetch_halfword(p.base_address + 14, 7);
    CHECK(f2.kind == FetchKind::PfqHit);

    // Crossing into the next line refills again.
    auto f3 = fp.fetch_halfword(p.base_address + 16, 8);
    CHECK(f3.kind == FetchKind::RefillFromFlash);
    CHECK(fp.refill_events().size() == 2);
    CHECK(fp.refill_events()[1].sequence_index == 1);
    CHECK(fp.refill_events()[1].line_base == p.base_address + 16);
    CHECK(fp.total_wait_cycles() == 12);

    SUBCASE("out of image fetch") {
        CHECK_THROWS_AS(fp.fetch_halfword(p.end_address(), 9), OutOfImage);
    }
}

TEST_CASE("fetch path: re-entering a cached line hits the i-cache") {
    isa::Program p = nop_lines(2);
    CacheConfig cfg; // i-cache on
    FetchPath fp(p, cfg);
    fp.fetch_halfword(p.base_address, 0);      // line 0 from flash
    fp.fetch_halfword(p.base_address + 16, 6); // line 1 from flash
    uint64_t hits_before = fp.icache().hits();
    auto f = fp.fetch_halfword(p.base_address, 12); // line 0 again
    CHECK(f.kind == FetchKind::RefillFromCache);
    CHECK(f.wait_cycles == 0);
    CHECK(fp.icache().hits() == hits_before + 1);
    CHECK(fp.flash_refills() == 2);
    CHECK(fp.cache_refills() == 1);
}

TEST_CASE("golden run: refill count equals the line count of straight-line code") {
    for (size_t lines = 1; lines <= 5; ++lines) {
        std::string src;
        for (size_t k = 0; k < lines * 4 - 1; ++k) src += "add.w r1, r1, #1\n";
        src += "bkpt\n"; // bkpt occupies the tail slot of the last line
        isa::Program p = isa::assemble_text(src);
        sim::RunConfig rc;
        rc.caches.i_cache_enabled = false;
        rc.caches.d_cache_enabled = false;
        campaign::GoldenRun g = campaign::golden_run(p, rc);
        CHECK(g.flash_refills == lines);
        // Cycle accounting: one per instruction plus 6 per flash refill.
        CHECK(g.total_cycles == (lines * 4) + 6 * lines);
    }
}

TEST_CASE("golden run: i-cache removes all second-pass flash refills of a loop") {
    const char* src = R"(
        movs r1, #0
        .nop16 1
        .nop32 3
loop:   add.w r2, r2, #1
        nop.w
        nop.w
        add.w r1, r1, #1
        cmp r1, #2
        blt loop
        bkpt
)";
    isa::Program p = isa::assemble_text(src);
    REQUIRE(p.symbols.at("loop") == p.base_address + 16);

    sim::RunConfig off;
    off.caches.i_cache_enabled = false;
    off.caches.d_cache_enabled = false;
    campaign::GoldenRun g_off = campaign::golden_run(p, off);
    // Lines: setup, body, tail; body and tail are refilled on both passes.
    CHECK(g_off.flash_refills == 5);
    CHECK(g_off.cache_refills == 0);
    CHECK(g_off.total_cycles == g_off.trace.size() + 6 * g_off.flash_refills);

    sim::RunConfig on;
    on.caches.d_cache_enabled = false;
    campaign::GoldenRun g_on = campaign::golden_run(p, on);
    CHECK(g_on.flash_refills == 3); // one per distinct line
    CHECK(g_on.cache_refills == 2); // second pass served from the i-cache
    CHECK(g_on.total_cycles == g_on.trace.size() + 6 * g_on.flash_refills);
    CHECK(g_on.trace.size() == g_off.trace.size());
    CHECK(g_on.final_state.arch_equal(g_off.final_state));

    // No flash refill after the first pass ends.
    uint64_t last_flash = 0;
    for (const auto& ev : g_on.refill_events)
        if (ev.kind == FetchKind::RefillFromFlash) last_flash = ev.cycle;
    for (const auto& ev : g_on.refill_events)
        if (ev.cycle > last_flash) CHECK(ev.kind == FetchKind::RefillFromCache);
}

TEST_CASE("golden run: loop fitting in 64 lines never refetches flash after warmup") {
    // 8 body lines iterated 4 times.
    std::string src = "        movs r1, #0\n        .nop16 1\n        .nop32 3\n";
    src += "loop:   add.w r2, r2, #1\n";
    for (int k = 0; k < 7 * 4 + 1; ++k) src += "        nop.w\n";
    src += "        add.w r1, r1, #1\n        cmp r1, #4\n        blt loop\n        bkpt\n";
    isa::Program p = isa::assemble_text(src);
    sim::RunConfig on;
    campaign::GoldenRun g = campaign::golden_run(p, on);
    std::set<uint32_t> distinct;
    for (const auto& ev : g.refill_events) distinct.insert(ev.line_base);
    CHECK(g.flash_refills == distinct.size());
}

TEST_CASE("fetch path: unfaulted execution equals the no-queue reference") {
    const char* sources[] = {
        "add.w r2, r2, #1\nadd.w r3, r3, #2\nnop\nbkpt\n",
        R"(
        movs r0, #0
loop:   add.w r0, r0, #1
        str.w r0, [r6]
        cmp r0, #3
        blt loop
        eor.w r1, r0, r0
        bkpt
)",
    };
    for (const char* src : sources) {
        isa::Program p = isa::assemble_text(src);
        sim::RunConfig rc;
        rc.ram_size = 64;
        isa::MachineState init = rc.initial_state(p.base_address);
        init.regs[6] = init.ram_base;

        campaign::GoldenRun g = campaign::golden_run(p, rc, &init);
        refexec::RefRun ref = refexec::reference_run(p, init);
        REQUIRE(ref.halted);
        CHECK(g.final_state.arch_equal(ref.final_state));
        REQUIRE(g.trace.size() == ref.executed_addresses.size());
        for (size_t k = 0; k < g.trace.size(); ++k) {
            CHECK(g.trace[k].pc == ref.executed_addresses[k]);
            CHECK(g.trace[k].source_address == ref.executed_addresses[k]);
        }
    }
}

TEST_CASE("config validation mirrors the measured configurations") {
    CacheConfig dcache_only{false, true, false};
    CHECK_THROWS_AS(validate_campaign_config(dcache_only), ConfigError);
    CacheConfig with_prefetch{true, true, true};
    CHECK_THROWS_AS(validate_campaign_config(with_prefetch), ConfigError);
    CHECK_NOTHROW(validate_campaign_config(CacheConfig{true, true, false}));
    CHECK_NOTHROW(validate_campaign_config(CacheConfig{true, false, false}));
    CHECK_NOTHROW(validate_campaign_config(CacheConfig{false, false, false}));
    isa::Program p = isa::assemble_text("nop\n");
    CHECK_THROWS_AS(FetchPath(p, with_prefetch), ConfigError);
}

TEST_CASE("refill event csv schema") {
    isa::Program p = nop_lines(2);
    sim::RunConfig rc;
    campaign::GoldenRun g = campaign::golden_run(p, rc);
    std::string csv = refill_events_csv(g.refill_events);
    CHECK(csv.rfind("sequence_index,kind,line_base,cycle\n", 0) == 0);
    CHECK(csv.find("0,refill_flash,0x08000000,0") != std::string::npos);
}

TEST_CASE("ns/cycle conversion at 168 MHz") {
    CHECK(ns_to_cycles(0) == 0);
    CHECK(ns_to_cycles(5) == 0);  // below one cycle
    CHECK(ns_to_cycles(6) == 1);  // 6 ns * 0.168 = 1.008
    CHECK(ns_to_cycles(60) == 10);
    for (uint64_t c = 0; c < 2000; ++c) CHECK(ns_to_cycles(cycles_to_ns(c)) == c);
}
