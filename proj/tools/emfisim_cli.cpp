// emfisim command line front end: assemble/disassemble Thumb-2 subset code,
// run it through the fetch-path simulator, inject prefetch-queue stalls, and
// drive classification campaigns.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "emfisim/campaign/config_file.hpp"
#include "emfisim/campaign/report_csv.hpp"
#include "emfisim/isa/disasm.hpp"
#include "emfisim/scenarios/scenarios.hpp"

namespace {

using namespace emfisim;

constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << data;
    if (!f) throw IoError("write failed: " + path);
}

isa::Program load_program(const std::string& path, uint32_t base) {
    if (path.size() > 4 && path.compare(path.size() - 4, 4, ".bin") == 0) {
        std::string raw = read_file(path);
        isa::Program p;
        p.base_address = base;
        p.bytes.assign(raw.begin(), raw.end());
        p.build_index();
        return p;
    }
    return isa::assemble_text(read_file(path), base);
}

void print_registers(const isa::MachineState& s) {
    for (int r = 0; r < 16; ++r) {
        std::printf("%-3s=%08x%s", isa::reg_name(uint8_t(r)).c_str(), s.regs[r],
                    (r % 4 == 3) ? "\n" : "  ");
    }
    std::printf("apsr: n=%d z=%d c=%d v=%d   cycles=%llu   %s\n", s.apsr.n, s.apsr.z, s.apsr.c,
                s.apsr.v, static_cast<unsigned long long>(s.cycles),
                s.halted ? "halted" : "not halted");
}

void print_ordinals(const char* label, const std::vector<size_t>& ords) {
    std::printf("%s", label);
    for (size_t o : ords) std::printf(" i%zu", o);
    std::printf("\n");
}

struct CacheFlags {
    bool icache = true;
    bool dcache = true;
    CLI::Option* dcache_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_flag("--icache,!--no-icache", icache, "instruction cache enabled (default on)");
        dcache_opt =
            cmd->add_flag("--dcache,!--no-dcache", dcache, "data cache enabled (default on)");
    }
    memhier::CacheConfig config() const {
        // d-cache-only is not a measured configuration; turning the i-cache
        // off implies the d-cache off unless it was set explicitly.
        bool d = dcache;
        if (!icache && dcache_opt && dcache_opt->count() == 0) d = false;
        return {icache, d, false};
    }
};

int cmd_asm(const std::string& src, const std::string& out, uint32_t base) {
    isa::Program p = isa::assemble_text(read_file(src), base);
    write_file(out, std::string(p.bytes.begin(), p.bytes.end()));
    std::printf("%s: %zu bytes at 0x%08x, %zu instructions\n", out.c_str(), p.bytes.size(),
                p.base_address, p.index.size());
    return 0;
}

int cmd_disasm(const std::string& path, uint32_t base) {
    isa::Program p = load_program(path, base);
    std::fputs(isa::disassemble(p).c_str(), stdout);
    return 0;
}

int cmd_run(const std::string& path, uint32_t base, const CacheFlags& caches, bool show_trace,
            const std::string& events_out) {
    isa::Program p = load_program(path, base);
    sim::RunConfig rc;
    rc.caches = caches.config();
    campaign::GoldenRun g = campaign::golden_run(p, rc);
    std::printf("golden run: %zu instructions, %llu cycles, %llu flash refills, "
                "%llu cache refills\n",
                g.trace.size(), static_cast<unsigned long long>(g.total_cycles),
                static_cast<unsigned long long>(g.flash_refills),
                static_cast<unsigned long long>(g.cache_refills));
    print_registers(g.final_state);
    if (show_trace) {
        for (const auto& t : g.trace) {
            size_t ord = t.ordinal;
            std::printf("  %08x  i%-3zu %s\n", t.pc, ord,
                        ord ? isa::to_text(p.index[ord - 1].instr, t.pc).c_str() : "?");
        }
    }
    if (!events_out.empty()) {
        write_file(events_out, memhier::refill_events_csv(g.refill_events));
        std::printf("refill events written to %s\n", events_out.c_str());
    }
    return 0;
}

int cmd_fault(const std::string& path, const std::string& scenario_name, uint32_t base,
              const CacheFlags& caches, uint64_t delay_ns, double power_dbm, bool force,
              uint64_t seed, const std::string& curve_file, bool show_trace) {
    isa::Program prog;
    sim::RunConfig rc;
    isa::MachineState init{0};
    uint64_t trigger_cycle = 0;
    if (!scenario_name.empty()) {
        scenarios::Scenario sc = scenarios::find_scenario(scenario_name);
        prog = sc.program;
        rc = sc.run_config;
        rc.caches = caches.config();
        init = sc.initial_state;
        trigger_cycle = sc.trigger_cycle;
    } else {
        prog = load_program(path, base);
        rc.caches = caches.config();
        init = rc.initial_state(prog.base_address);
    }

    fault::ResponseCurve curve = curve_file.empty() ? fault::default_curve(rc.caches)
                                                    : fault::load_curve_file(curve_file);
    campaign::GoldenRun golden = campaign::golden_run(prog, rc, &init);

    fault::FaultPulse pulse{delay_ns, power_dbm, seed};
    campaign::RunOutcome out =
        campaign::run_one(prog, rc, golden, pulse, curve, trigger_cycle, force);

    std::printf("outcome: %s\n", campaign::outcome_name(out.classification.outcome));
    if (out.result.crashed())
        std::printf("crash: %s (%s)\n", sim::crash_reason_name(out.result.crash_reason),
                    out.result.crash_detail.c_str());
    if (out.classification.observation) {
        print_ordinals("replayed:", out.classification.observation->replayed);
        print_ordinals("skipped: ", out.classification.observation->skipped);
        std::printf("resumes at i%zu\n", out.classification.observation->resume_at);
    }
    print_registers(out.result.final_state);
    if (show_trace) {
        for (const auto& t : out.result.trace)
            std::printf("  pc=%08x from=%08x i%zu\n", t.pc, t.source_address, t.ordinal);
    }
    return 0;
}

int cmd_campaign(const std::string& config_path, const std::string& out_csv, unsigned jobs) {
    campaign::CampaignConfig cfg = campaign::load_campaign_config(config_path);

    isa::Program prog;
    sim::RunConfig rc;
    isa::MachineState init{0};
    bool have_init = false;
    uint64_t trigger_cycle = cfg.trigger_cycle;
    if (!cfg.scenario_name.empty()) {
        scenarios::Scenario sc = scenarios::find_scenario(cfg.scenario_name);
        prog = sc.program;
        rc = sc.run_config;
        rc.caches = cfg.caches;
        init = sc.initial_state;
        have_init = true;
    } else {
        prog = load_program(cfg.program_path, 0x0800'0000);
        rc.caches = cfg.caches;
    }

    fault::ResponseCurve curve = cfg.resolved_curve();
    campaign::CampaignReport report =
        campaign::sweep(prog, rc, cfg.grid, cfg.seed, curve, trigger_cycle, jobs,
                        have_init ? &init : nullptr);
    campaign::export_report(report, out_csv);

    std::printf("campaign complete: %zu cells x %u reps -> %s\n", report.cells.size(),
                report.reps, out_csv.c_str());
    for (const auto& peak : report.per_power_peaks())
        std::printf("power %6.2f dBm: peak model-fault rate %.3f at delay %llu ns\n",
                    campaign::cdbm_to_dbm(peak.power_cdbm), peak.rate,
                    static_cast<unsigned long long>(peak.at_delay_ns));
    return 0;
}

int cmd_report(const std::string& csv_path) {
    campaign::CampaignReport r = campaign::import_report(csv_path);
    uint64_t runs = 0, mf = 0, crash = 0;
    for (const auto& c : r.cells) {
        runs += c.counts.total();
        mf += c.counts.n_model_fault;
        crash += c.counts.n_crash;
    }
    std::printf("%zu cells, %llu runs, %.3f model-fault fraction, %.3f crash fraction\n",
                r.cells.size(), static_cast<unsigned long long>(runs),
                runs ? double(mf) / double(runs) : 0.0,
                runs ? double(crash) / double(runs) : 0.0);
    for (const auto& peak : r.per_power_peaks())
        std::printf("power %6.2f dBm: peak model-fault rate %.3f at delay %llu ns\n",
                    campaign::cdbm_to_dbm(peak.power_cdbm), peak.rate,
                    static_cast<unsigned long long>(peak.at_delay_ns));
    return 0;
}

int cmd_scenario_list() {
    for (const auto& s : scenarios::all_scenarios())
        std::printf("%-32s %s\n", s.name.c_str(), s.description.c_str());
    return 0;
}

int cmd_scenario_run(const std::string& name, bool with_fault, uint64_t seed) {
    scenarios::Scenario sc = scenarios::find_scenario(name);
    campaign::GoldenRun golden = scenarios::scenario_golden(sc);
    std::printf("scenario %s\n", sc.name.c_str());
    std::printf("golden: %llu cycles, %llu flash refills\n",
                static_cast<unsigned long long>(golden.total_cycles),
                static_cast<unsigned long long>(golden.flash_refills));
    if (!with_fault) {
        print_registers(golden.final_state);
        return 0;
    }
    (void)seed;
    campaign::RunOutcome out = scenarios::scenario_forced_fault(sc, golden);
    std::printf("forced stall of refill #%llu (delay %llu ns)\n",
                static_cast<unsigned long long>(sc.target_refill_seq),
                static_cast<unsigned long long>(
                    golden.delay_ns_for_refill(sc.target_refill_seq, sc.trigger_cycle)));
    std::printf("outcome: %s\n", campaign::outcome_name(out.classification.outcome));
    if (out.classification.observation) {
        print_ordinals("replayed:", out.classification.observation->replayed);
        print_ordinals("skipped: ", out.classification.observation->skipped);
    }
    if (!sc.expected_replayed.empty()) {
        bool match = out.classification.observation &&
                     out.classification.observation->replayed == sc.expected_replayed &&
                     out.classification.observation->skipped == sc.expected_skipped;
        std::printf("expected pattern: %s\n", match ? "match" : "MISMATCH");
    }
    print_registers(out.result.final_state);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"prefetch-queue stall fault injection simulator"};
    app.require_subcommand(1);

    std::string src, out = "a.bin", path, scenario_name, curve_file, config_path, csv_path;
    std::string events_out;
    uint32_t base = 0x0800'0000;
    bool show_trace = false, force = false, with_fault = false;
    uint64_t delay_ns = 0, seed = 1;
    double power_dbm = 0.0;
    unsigned jobs = 1;
    CacheFlags run_caches, fault_caches;

    auto* c_asm = app.add_subcommand("asm", "assemble a source file to a flat image");
    c_asm->add_option("source", src, "assembly source")->required();
    c_asm->add_option("-o,--out", out, "output image path");
    c_asm->add_option("--base", base, "base address (16-byte aligned)");

    auto* c_dis = app.add_subcommand("disasm", "disassemble an image or source file");
    c_dis->add_option("image", path, "flat image (.bin) or source")->required();
    c_dis->add_option("--base", base, "base address of the image");

    auto* c_run = app.add_subcommand("run", "fault-free golden run");
    c_run->add_option("program", path, "source or .bin image")->required();
    c_run->add_option("--base", base, "base address");
    c_run->add_flag("--trace", show_trace, "print executed instructions");
    c_run->add_option("--events", events_out, "write refill event CSV here");
    run_caches.attach(c_run);

    auto* c_fault = app.add_subcommand("fault", "single run with one armed pulse");
    auto* fgrp = c_fault->add_option_group("target");
    fgrp->add_option("--program", src, "source or .bin image");
    fgrp->add_option("--scenario", scenario_name, "built-in scenario name");
    fgrp->require_option(1);
    c_fault->add_option("--base", base, "base address");
    c_fault->add_option("--delay-ns", delay_ns, "pulse delay from trigger")->required();
    c_fault->add_option("--power-dbm", power_dbm, "pulse power");
    c_fault->add_flag("--force", force, "suppress the targeted refill regardless of power");
    c_fault->add_option("--seed", seed, "rng seed");
    c_fault->add_option("--curve", curve_file, "response curve file");
    c_fault->add_flag("--trace", show_trace, "print the executed trace");
    fault_caches.attach(c_fault);

    auto* c_camp = app.add_subcommand("campaign", "run a sweep described by a config file");
    c_camp->add_option("--config", config_path, "campaign config file")->required();
    c_camp->add_option("--out", csv_path, "report CSV path")->required();
    c_camp->add_option("--jobs", jobs, "worker threads (result is identical for any value)");

    auto* c_rep = app.add_subcommand("report", "summarize a report CSV");
    c_rep->add_option("csv", path, "report CSV path")->required();

    auto* c_scen = app.add_subcommand("scenario", "list or run built-in scenarios");
    auto* c_list = c_scen->add_subcommand("list", "list scenarios");
    auto* c_srun = c_scen->add_subcommand("run", "run a scenario");
    c_srun->add_option("name", scenario_name, "scenario name")->required();
    c_srun->add_flag("--fault", with_fault, "also run the deterministic forced fault");
    c_srun->add_option("--seed", seed, "rng seed");
    c_scen->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_asm) return cmd_asm(src, out, base);
        if (*c_dis) return cmd_disasm(path, base);
        if (*c_run) return cmd_run(path, base, run_caches, show_trace, events_out);
        if (*c_fault)
            return cmd_fault(src, scenario_name, base, fault_caches, delay_ns, power_dbm, force,
                             seed, curve_file, show_trace);
        if (*c_camp) return cmd_campaign(config_path, csv_path, jobs);
        if (*c_rep) return cmd_report(path);
        if (*c_scen) {
            if (*c_list) return cmd_scenario_list();
            if (*c_srun) return cmd_scenario_run(scenario_name, with_fault, seed);
        }
    } catch (const isa::AsmError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const isa::EncodeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const memhier::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
