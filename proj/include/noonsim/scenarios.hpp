#pragma once

// End-to-end pipelines recreating each measured figure: the HOM dip, the
// two-photon Fock peak, Mach-Zehnder phase fringes for single-photon, NOON
// and weak-coherent inputs before/after storage, and the NOON-vs-coherent
// discriminator at the third beam splitter.
//
// Rail layout. BS1 maps the two input rails onto the interferometer paths
// M and N in place; the phase module acts on M; storage acts on M and N;
// BS2 recombines; BS3 (d3d4 runs) splits the N-side output onto D3/D4 via
// an auxiliary vacuum port P. HOM/peak scans add twin rails M~/N~ carrying
// the orthogonal-temporal component of the photon pair.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "noonsim/detection.hpp"
#include "noonsim/fitting.hpp"
#include "noonsim/optics.hpp"

namespace noonsim {

enum class Stage { before, after };
enum class SourceKind { single, noon, coherent };
enum class DetectorPair { d1d2, d3d4 };

inline const char* to_string(Stage s) { return s == Stage::before ? "before" : "after"; }
inline const char* to_string(SourceKind s) {
    switch (s) {
        case SourceKind::single: return "single";
        case SourceKind::noon: return "noon";
        case SourceKind::coherent: return "coherent";
    }
    return "?";
}
inline const char* to_string(DetectorPair d) { return d == DetectorPair::d1d2 ? "d1d2" : "d3d4"; }

// Timing-sequence numbers recorded with every run. Documentation only:
// they never enter the physics (a test perturbs them and compares scans
// bit-for-bit).
struct TimingMetadata {
    double repetition_rate_hz = 100.0;
    double cycle_ns = 500.0;
    int cycles_per_period = 2800;
    double pulse_ns = 70.0;
    double delta2_mhz = 70.0;
};

struct ExperimentConfig {
    double beta = 0.2;             // per-photon storage/retrieval efficiency
    double tau_ns = 20.0;          // source coherence time
    double mode_mismatch = 0.83;   // static interference-quality factor m
    double det_efficiency = 1.0;
    double background = 0.0;       // additive accidental-coincidence rate b per gate
    std::vector<double> theta_grid;    // rad; default 64 points over [0, pi]
    std::vector<double> delta_t_grid;  // ns; default +-100 in 10 ns steps
    long long trials_per_point = 200000;
    std::uint64_t seed = 20170904;
    Stage stage = Stage::before;
    SourceKind source = SourceKind::noon;
    DetectorPair detectors = DetectorPair::d1d2;
    double coherent_amplitude = 0.3;
    double storage_time_ns = 100.0;  // recorded on the channel; inert
    bool gate_enabled = true;
    double phase_jitter_rad = 0.0;   // optional arm-phase jitter s.d.
    // Interferometer lock operating point; unset = per-scenario default that
    // places theta = 0 at the fringe minimum.
    std::optional<double> lock_phase_rad;
    int max_total_photons = 4;
    TimingMetadata metadata;

    static std::vector<double> default_theta_grid(int n = 64) {
        std::vector<double> g(n);
        for (int i = 0; i < n; ++i) g[i] = kPi * i / (n - 1);
        return g;
    }

    static std::vector<double> default_delta_t_grid(double span_ns = 100.0, int n = 21) {
        std::vector<double> g(n);
        for (int i = 0; i < n; ++i) g[i] = -span_ns + 2.0 * span_ns * i / (n - 1);
        return g;
    }

    void fill_default_grids() {
        if (theta_grid.empty()) theta_grid = default_theta_grid();
        if (delta_t_grid.empty()) delta_t_grid = default_delta_t_grid();
    }

    void validate() const {
        auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in_unit(beta)) throw std::invalid_argument("config: beta must lie in [0, 1]");
        if (!(tau_ns > 0.0)) throw std::invalid_argument("config: tau_ns must be positive");
        if (!in_unit(mode_mismatch))
            throw std::invalid_argument("config: mode_mismatch must lie in [0, 1]");
        if (!in_unit(det_efficiency))
            throw std::invalid_argument("config: det_efficiency must lie in [0, 1]");
        if (!in_unit(background)) throw std::invalid_argument("config: background must lie in [0, 1]");
        if (trials_per_point <= 0)
            throw std::invalid_argument("config: trials_per_point must be positive");
        if (!(coherent_amplitude >= 0.0))
            throw std::invalid_argument("config: coherent_amplitude must be nonnegative");
        if (!(storage_time_ns >= 0.0))
            throw std::invalid_argument("config: storage_time_ns must be nonnegative");
        if (!(phase_jitter_rad >= 0.0))
            throw std::invalid_argument("config: phase_jitter_rad must be nonnegative");
        if (max_total_photons < 2)
            throw std::invalid_argument("config: max_total_photons must be >= 2");
    }
};

struct VisibilityEstimate {
    double value = std::numeric_limits<double>::quiet_NaN();
    double error = std::numeric_limits<double>::quiet_NaN();
};

struct ScenarioResult {
    std::string scenario_id;
    FringeScan scan;
    // Fit of the sampled counts and the visibility it implies. The Fock-peak
    // scan reports the g2 ratio instead and leaves the fits empty.
    std::optional<FitResult> fit;
    VisibilityEstimate visibility;
    // Same fit on the noiseless expected-rate curve.
    std::optional<FitResult> expected_fit;
    double expected_visibility = std::numeric_limits<double>::quiet_NaN();
    double g2_ratio = std::numeric_limits<double>::quiet_NaN();
};

// Default lock phases chosen so each measured law appears in its standard
// form with the theta = 0 point at the fringe minimum.
inline double auto_lock_phase(SourceKind source, DetectorPair detectors) {
    if (detectors == DetectorPair::d3d4) return kPi;
    return source == SourceKind::noon ? kPi / 2.0 : 0.0;
}

namespace detail {

inline MixedEnsemble mix_ensembles(std::vector<std::pair<double, MixedEnsemble>> parts) {
    std::vector<WeightedState> comps;
    for (auto& [w, ens] : parts) {
        if (w <= 1e-18) continue;
        for (const auto& c : ens.components()) comps.push_back({w * c.weight, c.state});
    }
    return MixedEnsemble(std::move(comps));
}

// --- HOM / Fock-peak geometry: rails M, N plus temporal twins. ---

struct PairRig {
    RegistryPtr reg;
    std::size_t m = 0, n = 1, mt = 2, nt = 3;

    PairRig() : reg(make_registry({"M", "N", "M~", "N~"}, 4)) {}

    DetectorMap detectors(double efficiency) const {
        DetectorMap map;
        map.assign({efficiency, 0.0, "D1"}, {m, mt});
        map.assign({efficiency, 0.0, "D2"}, {n, nt});
        return map;
    }

    MixedEnsemble source(double pair_overlap_weight) const {
        // pair_overlap_weight = m * xi(dT)^2, realized as an effective xi.
        return mix_distinguishability(PairSource{reg, m, n, mt, nt},
                                      std::sqrt(std::max(0.0, pair_overlap_weight)));
    }

    MixedEnsemble both_rails(const MixedEnsemble& e, const Mat2& u) const {
        return ensemble_mode_pair_unitary(ensemble_mode_pair_unitary(e, m, n, u), mt, nt, u);
    }
};

inline double hom_expected_rate(const ExperimentConfig& cfg, const PairRig& rig, double dt_ns) {
    const OverlapModel overlap{cfg.tau_ns, dt_ns};
    const double w = cfg.mode_mismatch * overlap.xi() * overlap.xi();
    MixedEnsemble ens = rig.both_rails(rig.source(w), fifty_fifty());
    return pair_rate(ens, "D1", "D2", rig.detectors(cfg.det_efficiency)) + cfg.background;
}

inline double peak_expected_rate(const ExperimentConfig& cfg, const PairRig& rig, double dt_ns) {
    const OverlapModel overlap{cfg.tau_ns, dt_ns};
    const double w = cfg.mode_mismatch * overlap.xi() * overlap.xi();
    MixedEnsemble ens = rig.both_rails(rig.source(w), fifty_fifty());
    // Path N blocked: everything on the N rails is absorbed.
    ens = memory_apply(ens, MemoryChannel{0.0, 0.0, true}, {rig.n, rig.nt});
    ens = rig.both_rails(ens, fifty_fifty());
    return pair_rate(ens, "D1", "D2", rig.detectors(cfg.det_efficiency)) + cfg.background;
}

// --- Mach-Zehnder fringe geometry. ---

struct FringeRig {
    RegistryPtr reg;
    std::size_t m = 0, n = 1, p = 2;
    bool has_bs3 = false;

    explicit FringeRig(const ExperimentConfig& cfg) {
        has_bs3 = cfg.detectors == DetectorPair::d3d4;
        // Truncation: 12 for coherent inputs so the Poisson tail cannot
        // distort the (1-cos)^2 law; the configured bound otherwise.
        const int cap = cfg.source == SourceKind::coherent ? std::max(12, cfg.max_total_photons)
                                                           : cfg.max_total_photons;
        if (has_bs3)
            reg = make_registry({"M", "N", "P"}, cap);
        else
            reg = make_registry({"M", "N"}, cap);
    }

    DetectorMap detectors(double efficiency) const {
        DetectorMap map;
        if (has_bs3) {
            map.assign({efficiency, 0.0, "D1"}, {m});
            map.assign({efficiency, 0.0, "D3"}, {n});
            map.assign({efficiency, 0.0, "D4"}, {p});
        } else {
            map.assign({efficiency, 0.0, "D1"}, {m});
            map.assign({efficiency, 0.0, "D2"}, {n});
        }
        return map;
    }
};

inline double fringe_expected_rate(const ExperimentConfig& cfg, const FringeRig& rig, double theta) {
    const double alpha = 2.0 * theta;  // phase module: alpha = 2 theta
    const double lock =
        cfg.lock_phase_rad ? *cfg.lock_phase_rad : auto_lock_phase(cfg.source, cfg.detectors);

    StateVector input = [&] {
        Occupation occ(rig.reg->size(), 0);
        switch (cfg.source) {
            case SourceKind::single:
                occ[rig.n] = 1;  // heralded signal enters the N-side input port
                return basis_state(rig.reg, occ);
            case SourceKind::noon:
                occ[rig.m] = 1;
                occ[rig.n] = 1;
                return basis_state(rig.reg, occ);
            case SourceKind::coherent:
                return weak_coherent_state(cfg.coherent_amplitude, rig.reg, rig.m);
        }
        throw std::logic_error("unreachable source kind");
    }();

    MixedEnsemble ens = MixedEnsemble::pure(apply_mode_pair_unitary(input, rig.m, rig.n, fifty_fifty()));

    // Interfering weight: arm-matching factor per interfering photon plus
    // optional lock-phase jitter damping of the n-photon cross term.
    const double sigma2 = cfg.phase_jitter_rad * cfg.phase_jitter_rad;
    double w;
    if (cfg.source == SourceKind::noon)
        w = cfg.mode_mismatch * cfg.mode_mismatch * std::exp(-2.0 * sigma2);
    else
        w = cfg.mode_mismatch * std::exp(-0.5 * sigma2);

    if (w < 1.0 - 1e-15)
        ens = detail::mix_ensembles({{w, ens}, {1.0 - w, decohere_mode(ens, rig.m)}});

    ens = ensemble_path_phase(ens, rig.m, alpha + lock);

    if (cfg.stage == Stage::after) {
        MemoryChannel channel{cfg.beta, cfg.storage_time_ns, cfg.gate_enabled};
        ens = memory_apply(ens, channel, {rig.m, rig.n});
    }

    ens = ensemble_mode_pair_unitary(ens, rig.m, rig.n, fifty_fifty());
    if (rig.has_bs3) ens = ensemble_mode_pair_unitary(ens, rig.n, rig.p, fifty_fifty());

    const DetectorMap map = rig.detectors(cfg.det_efficiency);
    double rate;
    if (cfg.source == SourceKind::single)
        rate = singles_rate(ens, "D2", map);  // heralding trigger is a perfect flag
    else if (rig.has_bs3)
        rate = pair_rate(ens, "D3", "D4", map);
    else
        rate = pair_rate(ens, "D1", "D2", map);
    return rate + cfg.background;
}

template <class RateFn>
FringeScan build_scan(const std::string& setting_name, const std::vector<double>& grid,
                      const ExperimentConfig& cfg, RateFn&& rate_fn) {
    FringeScan scan;
    scan.setting_name = setting_name;
    scan.points.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double rate = rate_fn(grid[i]);
        const auto rec = sample_counts(std::min(rate, 1.0), cfg.trials_per_point,
                                       derive_seed(cfg.seed, i));
        scan.points.push_back(make_scan_point(grid[i], rate, rec.counts));
    }
    return scan;
}

}  // namespace detail

// HOM dip: coincidences of D1/D2 straight after BS1 (no BS2) against the
// source delay. Reports the fitted dip visibility V0.
inline ScenarioResult run_hom_scan(ExperimentConfig cfg) {
    cfg.fill_default_grids();
    cfg.validate();
    detail::PairRig rig;
    ScenarioResult res;
    res.scenario_id = "hom";
    res.scan = detail::build_scan("delta_t_ns", cfg.delta_t_grid, cfg, [&](double dt) {
        return detail::hom_expected_rate(cfg, rig, dt);
    });
    res.fit = fit_gaussian_dip(res.scan, false);
    res.expected_fit = fit_gaussian_dip(res.scan, true);
    res.visibility = {res.fit->visibility, res.fit->visibility_err};
    res.expected_visibility = res.expected_fit->visibility;
    return res;
}

// Fock-|2> peak: BS2 in place, path N blocked; D1/D2 coincidences against
// delay. Reports peak/baseline as the g2 ratio (no curve fit).
inline ScenarioResult run_fock_peak_scan(ExperimentConfig cfg) {
    cfg.fill_default_grids();
    cfg.validate();
    detail::PairRig rig;
    ScenarioResult res;
    res.scenario_id = "fock-peak";
    res.scan = detail::build_scan("delta_t_ns", cfg.delta_t_grid, cfg, [&](double dt) {
        return detail::peak_expected_rate(cfg, rig, dt);
    });
    res.g2_ratio = g2_max(res.scan);
    return res;
}

// Phase fringe at BS2 (d1d2) or BS3 (d3d4) for the configured source and
// storage stage. Reports the fitted fringe visibility V1.
inline ScenarioResult run_phase_fringe(ExperimentConfig cfg) {
    cfg.fill_default_grids();
    cfg.validate();
    if (cfg.source == SourceKind::single && cfg.detectors == DetectorPair::d3d4)
        throw std::invalid_argument(
            "run_phase_fringe: single-photon source is measured at d1d2 only");
    detail::FringeRig rig(cfg);
    ScenarioResult res;
    res.scenario_id = std::string("fringe-") + to_string(cfg.source) + "-" + to_string(cfg.stage) +
                      "-" + to_string(cfg.detectors);
    res.scan = detail::build_scan("theta_rad", cfg.theta_grid, cfg, [&](double theta) {
        return detail::fringe_expected_rate(cfg, rig, theta);
    });
    const int k = cfg.source == SourceKind::single ? 1 : 2;
    const FitModel model = (cfg.source == SourceKind::coherent && cfg.detectors == DetectorPair::d3d4)
                               ? FitModel::cosine_squared
                               : FitModel::cosine_k;
    res.fit = fit_fringe(res.scan, k, model, false);
    res.expected_fit = fit_fringe(res.scan, k, model, true);
    res.visibility = {res.fit->visibility, res.fit->visibility_err};
    res.expected_visibility = res.expected_fit->visibility;
    return res;
}

// NOON-vs-coherent discrimination on a D3-D4 fringe scan: fit both laws and
// pick the one with the lower residual. Residual ratios within 5% are
// reported as ambiguous.
struct Classification {
    enum class Label { noon, coherent, ambiguous } label = Label::ambiguous;
    double residual_ratio = 1.0;  // losing rms / winning rms
    FitResult noon_fit;
    FitResult coherent_fit;
};

inline Classification classify_source(const FringeScan& scan_d3d4) {
    Classification c;
    c.noon_fit = fit_fringe(scan_d3d4, 2, FitModel::cosine_k, false);
    c.coherent_fit = fit_fringe(scan_d3d4, 1, FitModel::cosine_squared, false);
    const double rn = c.noon_fit.residual_rms;
    const double rc = c.coherent_fit.residual_rms;
    const double lo = std::min(rn, rc);
    const double hi = std::max(rn, rc);
    c.residual_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (c.residual_ratio < 1.05)
        c.label = Classification::Label::ambiguous;
    else
        c.label = rn < rc ? Classification::Label::noon : Classification::Label::coherent;
    return c;
}

// Choose the background floor b so that the single-photon after-storage
// fringe visibility (noiseless fitted V1) matches the target. Monotone
// bisection; everything else in the config is left untouched.
inline double calibrate_background(ExperimentConfig cfg, double target_v1) {
    cfg.source = SourceKind::single;
    cfg.stage = Stage::after;
    cfg.detectors = DetectorPair::d1d2;
    cfg.fill_default_grids();

    auto v1_of = [&](double b) {
        ExperimentConfig c = cfg;
        c.background = b;
        detail::FringeRig rig(c);
        FringeScan scan;
        scan.setting_name = "theta_rad";
        for (double th : c.theta_grid)
            scan.points.push_back(
                make_scan_point(th, detail::fringe_expected_rate(c, rig, th), 0));
        return fit_fringe(scan, 1, FitModel::cosine_k, true).visibility;
    };

    double lo = 0.0, hi = 0.2;
    if (v1_of(lo) < target_v1)
        throw std::invalid_argument("calibrate_background: target visibility unreachable (too high)");
    while (v1_of(hi) > target_v1) {
        hi *= 2.0;
        if (hi > 1.0)
            throw std::invalid_argument("calibrate_background: target visibility unreachable (too low)");
    }
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (v1_of(mid) > target_v1)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace noonsim
