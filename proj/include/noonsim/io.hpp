#pragma once

// CSV and manifest emission. A run is fully determined by its manifest:
// re-running the same (config, seed) reproduces byte-identical CSV.
//
// CSV schema: `setting,expected_rate,counts,stderr,fit_curve`, numbers with
// 9 significant digits, manifest embedded as leading '#' comment lines.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "noonsim/config.hpp"

namespace noonsim {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string scenario_id;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> outputs;

    std::string to_text() const {
        std::string s;
        s += "tool = noonsim " + tool_version + "\n";
        s += "scenario = " + scenario_id + "\n";
        s += "seed = " + std::to_string(seed) + "\n";
        for (const auto& [k, v] : config) s += k + " = " + v + "\n";
        for (const auto& o : outputs) s += "output = " + o + "\n";
        return s;
    }
};

namespace detail {

inline std::string format_g9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace detail

inline std::string scan_to_csv(const ScenarioResult& result, const RunManifest& manifest) {
    std::string out;
    out += "# noonsim " + std::string(kToolVersion) + " run\n";
    out += "# scenario = " + manifest.scenario_id + "\n";
    out += "# seed = " + std::to_string(manifest.seed) + "\n";
    for (const auto& [k, v] : manifest.config) out += "# " + k + " = " + v + "\n";
    out += "setting,expected_rate,counts,stderr,fit_curve\n";
    const long long trials =
        [&] {
            for (const auto& [k, v] : manifest.config)
                if (k == "trials_per_point") return std::stoll(v);
            return 1LL;
        }();
    for (const auto& p : result.scan.points) {
        // fit_curve in counts units; scans without a fit carry the expected curve.
        const double curve = result.fit ? result.fit->eval(p.setting)
                                        : p.expected_rate * static_cast<double>(trials);
        out += detail::format_g9(p.setting) + "," + detail::format_g9(p.expected_rate) + "," +
               std::to_string(p.counts) + "," + detail::format_g9(p.stderr_counts) + "," +
               detail::format_g9(curve) + "\n";
    }
    return out;
}

// Write atomically enough for our purposes: write a temp file, then rename;
// the temp file is removed on failure so no partial output survives.
inline void write_file_exact(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file '" + tmp.string() + "'");
        out << content;
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw std::runtime_error("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("failed to move output into place at '" + path + "'");
    }
}

}  // namespace noonsim
