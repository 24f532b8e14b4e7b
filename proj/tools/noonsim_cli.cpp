// noonsim command-line front end.
//
// Subcommands: hom, fock-peak, fringe, discriminate, selftest. Each scenario
// writes plot-ready CSV plus a manifest sidecar into --out; flags override
// config-file values.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noonsim/noonsim.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path, "Key-value config file");
    sub->add_option("--out", flags.out_dir, "Output directory")->capture_default_str();

    auto opt = [sub, &flags](const std::string& flag, const std::string& key,
                             const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [key, &flags](const std::string& v) { flags.overrides.emplace_back(key, v); },
            help);
    };
    opt("--seed", "seed", "RNG seed (u64)");
    opt("--beta", "beta", "Per-photon storage efficiency in [0,1]");
    opt("--tau-ns", "tau_ns", "Source coherence time, ns");
    opt("--mode-mismatch", "mode_mismatch", "Static interference-quality factor in [0,1]");
    opt("--det-efficiency", "det_efficiency", "Detector efficiency in [0,1]");
    opt("--background", "background", "Accidental-coincidence rate per gate in [0,1]");
    opt("--theta-points", "theta_points", "Points on the [0,pi] theta grid (>=8)");
    opt("--delta-t-span-ns", "delta_t_span_ns", "Half-span of the delay grid, ns");
    opt("--delta-t-points", "delta_t_points", "Points on the delay grid (>=8)");
    opt("--trials-per-point", "trials_per_point", "Counting gates per scan point");
    opt("--coherent-amplitude", "coherent_amplitude", "Weak coherent amplitude |alpha|");
    opt("--storage-time-ns", "storage_time_ns", "Storage time recorded on the channel, ns");
    opt("--gate-enabled", "gate_enabled", "true|false: gate out non-retrieved light");
    opt("--phase-jitter-rad", "phase_jitter_rad", "Arm phase jitter s.d., rad");
    opt("--lock-phase-rad", "lock_phase_rad", "Interferometer lock phase, rad (or 'auto')");
    opt("--max-total-photons", "max_total_photons", "Fock-space truncation bound");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noonsim: two-photon NOON-state generation, storage and interference simulator"};
    app.require_subcommand(1);

    CommonFlags hom_flags, peak_flags, fringe_flags, disc_flags;
    std::string fringe_source = "noon", fringe_stage = "before", fringe_detectors = "d1d2";
    std::string disc_source = "noon", disc_stage = "before";

    CLI::App* hom = app.add_subcommand("hom", "HOM dip scan (D1-D2 coincidences vs source delay)");
    add_common(hom, hom_flags);

    CLI::App* peak = app.add_subcommand("fock-peak", "Fock |2> peak scan behind BS2 with path N blocked");
    add_common(peak, peak_flags);

    CLI::App* fringe = app.add_subcommand("fringe", "Phase fringe scan vs half-wave-plate angle");
    add_common(fringe, fringe_flags);
    fringe->add_option("--source", fringe_source, "single|noon|coherent")->capture_default_str();
    fringe->add_option("--stage", fringe_stage, "before|after")->capture_default_str();
    fringe->add_option("--detectors", fringe_detectors, "d1d2|d3d4")->capture_default_str();

    CLI::App* disc = app.add_subcommand("discriminate",
                                        "Generate a D3-D4 scan for the given source and classify it");
    add_common(disc, disc_flags);
    disc->add_option("--source", disc_source, "noon|coherent")->capture_default_str();
    disc->add_option("--stage", disc_stage, "before|after")->capture_default_str();

    CLI::App* self = app.add_subcommand("selftest", "Run the built-in verification suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (self->parsed()) return noonsim::run_selftest(std::cout) ? 0 : 1;

        auto run = [](const char* cmd, CommonFlags& flags) {
            noonsim::ExperimentConfig cfg = noonsim::parse_config(flags.config_path, flags.overrides);
            return noonsim::run_subcommand(cmd, cfg, flags.out_dir, std::cout);
        };

        if (hom->parsed()) return run("hom", hom_flags);
        if (peak->parsed()) return run("fock-peak", peak_flags);
        if (fringe->parsed()) {
            fringe_flags.overrides.emplace_back("source", fringe_source);
            fringe_flags.overrides.emplace_back("stage", fringe_stage);
            fringe_flags.overrides.emplace_back("detectors", fringe_detectors);
            return run("fringe", fringe_flags);
        }
        if (disc->parsed()) {
            disc_flags.overrides.emplace_back("source", disc_source);
            disc_flags.overrides.emplace_back("stage", disc_stage);
            disc_flags.overrides.emplace_back("detectors", "d3d4");
            return run("discriminate", disc_flags);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
