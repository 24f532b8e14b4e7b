#pragma once

// Subcommand orchestration shared by the CLI binary and the tests: execute
// a named scenario, write its CSV and manifest, and report a summary line.

#include <filesystem>
#include <ostream>

#include "noonsim/io.hpp"
#include "noonsim/selftest.hpp"

namespace noonsim {

struct RunPaths {
    std::string csv;
    std::string manifest;
};

inline RunPaths output_paths(const std::string& out_dir, const std::string& scenario_id) {
    namespace fs = std::filesystem;
    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    return {(dir / (scenario_id + ".csv")).string(),
            (dir / (scenario_id + ".manifest.txt")).string()};
}

inline RunPaths write_result(const ScenarioResult& result, const ExperimentConfig& cfg,
                             const std::string& out_dir) {
    RunPaths paths = output_paths(out_dir, result.scenario_id);
    RunManifest manifest;
    manifest.scenario_id = result.scenario_id;
    manifest.seed = cfg.seed;
    manifest.config = config_snapshot(cfg);
    manifest.outputs = {paths.csv};
    write_file_exact(paths.csv, scan_to_csv(result, manifest));
    write_file_exact(paths.manifest, manifest.to_text());
    return paths;
}

// Run one subcommand. Returns the process exit status; failures remove any
// partially written output and report on `os`.
inline int run_subcommand(const std::string& cmd, const ExperimentConfig& cfg,
                          const std::string& out_dir, std::ostream& os) {
    try {
        if (cmd == "selftest") return run_selftest(os) ? 0 : 1;

        ScenarioResult result;
        if (cmd == "hom") {
            result = run_hom_scan(cfg);
            os << "hom: fitted V0 = " << result.visibility.value << " +- "
               << result.visibility.error << " (noiseless " << result.expected_visibility << ")\n";
        } else if (cmd == "fock-peak") {
            result = run_fock_peak_scan(cfg);
            os << "fock-peak: g2 peak/baseline = " << result.g2_ratio << "\n";
        } else if (cmd == "fringe") {
            result = run_phase_fringe(cfg);
            os << result.scenario_id << ": fitted V1 = " << result.visibility.value << " +- "
               << result.visibility.error << " (noiseless " << result.expected_visibility << ")\n";
        } else if (cmd == "discriminate") {
            ExperimentConfig c = cfg;
            c.detectors = DetectorPair::d3d4;
            result = run_phase_fringe(c);
            result.scenario_id = std::string("discriminate-") + to_string(c.source);
            const Classification cls = classify_source(result.scan);
            const char* label = cls.label == Classification::Label::noon        ? "noon"
                                : cls.label == Classification::Label::coherent ? "coherent"
                                                                                : "ambiguous";
            os << "discriminate: input " << to_string(c.source) << " classified as " << label
               << " (residual ratio " << cls.residual_ratio << ")\n";
            const RunPaths paths = write_result(result, c, out_dir);
            os << "wrote " << paths.csv << "\n";
            return cls.label == Classification::Label::ambiguous ? 2 : 0;
        } else {
            os << "unknown subcommand '" << cmd << "'\n";
            return 2;
        }

        const RunPaths paths = write_result(result, cfg, out_dir);
        os << "wrote " << paths.csv << "\n";
        return 0;
    } catch (const std::exception& e) {
        os << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace noonsim
