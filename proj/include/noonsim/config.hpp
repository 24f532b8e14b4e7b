#pragma once

// Flat key-value configuration files (`key = value`, '#' comments) plus
// command-line overrides. Unknown keys and out-of-range values are rejected
// with messages naming the offending key.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "noonsim/scenarios.hpp"

namespace noonsim {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not a number: '" + value + "'");
    }
    if (pos != value.size())
        throw std::invalid_argument("config key '" + key + "': trailing junk in '" + value + "'");
    return v;
}

inline long long parse_int(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + value + "'");
    }
    if (pos != value.size())
        throw std::invalid_argument("config key '" + key + "': trailing junk in '" + value + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + value + "'");
}

inline double require_unit_interval(const std::string& key, double v) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("config key '" + key + "': value " + std::to_string(v) +
                                    " outside [0, 1]");
    return v;
}

inline double require_positive(const std::string& key, double v) {
    if (!(v > 0.0))
        throw std::invalid_argument("config key '" + key + "': value must be positive");
    return v;
}

}  // namespace detail

// Documented configuration keys, applied onto an ExperimentConfig. Grid
// keys describe uniform grids; theta runs over [0, pi] inclusive and the
// delay grid is symmetric about zero.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    using namespace detail;
    if (key == "beta")
        cfg.beta = require_unit_interval(key, parse_double(key, value));
    else if (key == "tau_ns")
        cfg.tau_ns = require_positive(key, parse_double(key, value));
    else if (key == "mode_mismatch")
        cfg.mode_mismatch = require_unit_interval(key, parse_double(key, value));
    else if (key == "det_efficiency")
        cfg.det_efficiency = require_unit_interval(key, parse_double(key, value));
    else if (key == "background")
        cfg.background = require_unit_interval(key, parse_double(key, value));
    else if (key == "theta_points") {
        const long long n = parse_int(key, value);
        if (n < 8) throw std::invalid_argument("config key 'theta_points': need at least 8");
        cfg.theta_grid = ExperimentConfig::default_theta_grid(static_cast<int>(n));
    } else if (key == "delta_t_span_ns") {
        const double span = require_positive(key, parse_double(key, value));
        const int n = cfg.delta_t_grid.empty() ? 21 : static_cast<int>(cfg.delta_t_grid.size());
        cfg.delta_t_grid = ExperimentConfig::default_delta_t_grid(span, n);
    } else if (key == "delta_t_points") {
        const long long n = parse_int(key, value);
        if (n < 8) throw std::invalid_argument("config key 'delta_t_points': need at least 8");
        const double span = cfg.delta_t_grid.empty()
                                ? 100.0
                                : std::max(std::abs(cfg.delta_t_grid.front()),
                                           std::abs(cfg.delta_t_grid.back()));
        cfg.delta_t_grid = ExperimentConfig::default_delta_t_grid(span, static_cast<int>(n));
    } else if (key == "trials_per_point") {
        const long long n = parse_int(key, value);
        if (n <= 0) throw std::invalid_argument("config key 'trials_per_point': must be positive");
        cfg.trials_per_point = n;
    } else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "coherent_amplitude") {
        const double v = parse_double(key, value);
        if (!(v >= 0.0))
            throw std::invalid_argument("config key 'coherent_amplitude': must be nonnegative");
        cfg.coherent_amplitude = v;
    } else if (key == "storage_time_ns") {
        const double v = parse_double(key, value);
        if (!(v >= 0.0))
            throw std::invalid_argument("config key 'storage_time_ns': must be nonnegative");
        cfg.storage_time_ns = v;
    } else if (key == "gate_enabled")
        cfg.gate_enabled = parse_bool(key, value);
    else if (key == "phase_jitter_rad") {
        const double v = parse_double(key, value);
        if (!(v >= 0.0))
            throw std::invalid_argument("config key 'phase_jitter_rad': must be nonnegative");
        cfg.phase_jitter_rad = v;
    } else if (key == "lock_phase_rad") {
        if (value == "auto")
            cfg.lock_phase_rad.reset();
        else
            cfg.lock_phase_rad = parse_double(key, value);
    } else if (key == "max_total_photons") {
        const long long n = parse_int(key, value);
        if (n < 2) throw std::invalid_argument("config key 'max_total_photons': need at least 2");
        cfg.max_total_photons = static_cast<int>(n);
    } else if (key == "stage") {
        if (value == "before")
            cfg.stage = Stage::before;
        else if (value == "after")
            cfg.stage = Stage::after;
        else
            throw std::invalid_argument("config key 'stage': expected before|after, got '" + value +
                                        "'");
    } else if (key == "source") {
        if (value == "single")
            cfg.source = SourceKind::single;
        else if (value == "noon")
            cfg.source = SourceKind::noon;
        else if (value == "coherent")
            cfg.source = SourceKind::coherent;
        else
            throw std::invalid_argument("config key 'source': expected single|noon|coherent, got '" +
                                        value + "'");
    } else if (key == "detectors") {
        if (value == "d1d2")
            cfg.detectors = DetectorPair::d1d2;
        else if (value == "d3d4")
            cfg.detectors = DetectorPair::d3d4;
        else
            throw std::invalid_argument("config key 'detectors': expected d1d2|d3d4, got '" + value +
                                        "'");
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

// Parse a config file (empty path = all defaults) and apply overrides in
// order. The returned config has grids filled and has been validated.
inline ExperimentConfig parse_config(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    ExperimentConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("config: cannot open file '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                            " is not 'key = value'");
            apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                               detail::trim(line.substr(eq + 1)));
        }
    }
    for (const auto& [k, v] : overrides) apply_config_entry(cfg, k, v);
    cfg.fill_default_grids();
    cfg.validate();
    return cfg;
}

// Config snapshot as ordered key-value pairs, for manifests.
inline std::vector<std::pair<std::string, std::string>> config_snapshot(const ExperimentConfig& cfg) {
    auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(12);
        os << v;
        return os.str();
    };
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("beta", fmt(cfg.beta));
    kv.emplace_back("tau_ns", fmt(cfg.tau_ns));
    kv.emplace_back("mode_mismatch", fmt(cfg.mode_mismatch));
    kv.emplace_back("det_efficiency", fmt(cfg.det_efficiency));
    kv.emplace_back("background", fmt(cfg.background));
    kv.emplace_back("theta_points", std::to_string(cfg.theta_grid.size()));
    kv.emplace_back("delta_t_points", std::to_string(cfg.delta_t_grid.size()));
    kv.emplace_back("trials_per_point", std::to_string(cfg.trials_per_point));
    kv.emplace_back("seed", std::to_string(cfg.seed));
    kv.emplace_back("stage", to_string(cfg.stage));
    kv.emplace_back("source", to_string(cfg.source));
    kv.emplace_back("detectors", to_string(cfg.detectors));
    kv.emplace_back("coherent_amplitude", fmt(cfg.coherent_amplitude));
    kv.emplace_back("storage_time_ns", fmt(cfg.storage_time_ns));
    kv.emplace_back("gate_enabled", cfg.gate_enabled ? "true" : "false");
    kv.emplace_back("phase_jitter_rad", fmt(cfg.phase_jitter_rad));
    kv.emplace_back("lock_phase_rad",
                    cfg.lock_phase_rad ? fmt(*cfg.lock_phase_rad) : std::string("auto"));
    kv.emplace_back("max_total_photons", std::to_string(cfg.max_total_photons));
    kv.emplace_back("repetition_rate_hz", fmt(cfg.metadata.repetition_rate_hz));
    kv.emplace_back("cycle_ns", fmt(cfg.metadata.cycle_ns));
    kv.emplace_back("cycles_per_period", std::to_string(cfg.metadata.cycles_per_period));
    kv.emplace_back("pulse_ns", fmt(cfg.metadata.pulse_ns));
    kv.emplace_back("delta2_mhz", fmt(cfg.metadata.delta2_mhz));
    return kv;
}

}  // namespace noonsim
