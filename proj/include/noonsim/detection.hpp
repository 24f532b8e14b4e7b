#pragma once

// Detector and counting model: click-pattern enumeration with per-detector
// efficiency and dark probability, normally-ordered coincidence rates,
// Poisson count sampling, visibility estimators and the g2 peak ratio.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "noonsim/fock.hpp"
#include "noonsim/rng.hpp"

namespace noonsim {

struct DetectorModel {
    double efficiency = 1.0;   // per-photon detection probability
    double dark_prob = 0.0;    // dark click probability per counting gate
    std::string label;

    void validate() const {
        if (!(efficiency >= 0.0 && efficiency <= 1.0))
            throw std::invalid_argument("DetectorModel '" + label + "': efficiency must lie in [0, 1]");
        if (!(dark_prob >= 0.0 && dark_prob <= 1.0))
            throw std::invalid_argument("DetectorModel '" + label + "': dark_prob must lie in [0, 1]");
    }
};

// Wiring of registry modes onto detectors. Several modes (a rail and its
// temporal twin) may feed one detector; every mode that can carry photons
// must be assigned somewhere.
class DetectorMap {
public:
    void assign(DetectorModel det, std::vector<std::size_t> modes) {
        det.validate();
        for (const auto& d : detectors_)
            if (d.label == det.label)
                throw std::invalid_argument("DetectorMap: duplicate detector label '" + det.label + "'");
        detectors_.push_back(std::move(det));
        mode_sets_.push_back(std::move(modes));
    }

    std::size_t count() const { return detectors_.size(); }
    const DetectorModel& detector(std::size_t i) const { return detectors_[i]; }
    const std::vector<std::size_t>& modes_of(std::size_t i) const { return mode_sets_[i]; }

    std::size_t index_of(const std::string& label) const {
        for (std::size_t i = 0; i < detectors_.size(); ++i)
            if (detectors_[i].label == label) return i;
        throw std::invalid_argument("DetectorMap: unknown detector '" + label + "'");
    }

    bool covers_mode(std::size_t mode) const {
        for (const auto& set : mode_sets_)
            for (std::size_t m : set)
                if (m == mode) return true;
        return false;
    }

    int photons_at(std::size_t i, const Occupation& occ) const {
        int n = 0;
        for (std::size_t m : mode_sets_[i]) n += occ[m];
        return n;
    }

    void require_covering(const StateVector& state) const {
        for (const auto& [occ, a] : state.amplitudes())
            for (std::size_t m = 0; m < occ.size(); ++m)
                if (occ[m] > 0 && !covers_mode(m))
                    throw std::invalid_argument("DetectorMap: mode '" + state.registry()->label(m) +
                                                "' carries photons but has no detector assigned");
    }

private:
    std::vector<DetectorModel> detectors_;
    std::vector<std::vector<std::size_t>> mode_sets_;
};

// Joint click-pattern distribution over the detectors of a DetectorMap,
// indexed by bitmask (bit i = detector i clicked).
struct ClickDistribution {
    std::vector<std::string> labels;
    std::vector<double> probability;  // size 2^labels.size()

    double total() const {
        double s = 0.0;
        for (double p : probability) s += p;
        return s;
    }

    double marginal_click(std::size_t i) const {
        double s = 0.0;
        for (std::size_t mask = 0; mask < probability.size(); ++mask)
            if (mask & (std::size_t{1} << i)) s += probability[mask];
        return s;
    }

    double joint_click(std::size_t i, std::size_t j) const {
        double s = 0.0;
        const std::size_t need = (std::size_t{1} << i) | (std::size_t{1} << j);
        for (std::size_t mask = 0; mask < probability.size(); ++mask)
            if ((mask & need) == need) s += probability[mask];
        return s;
    }
};

// Exact enumeration: every photon is detected independently with its
// detector's efficiency, dark clicks OR-ed in per detector and gate.
inline ClickDistribution click_probabilities(const MixedEnsemble& ensemble, const DetectorMap& map) {
    const std::size_t nd = map.count();
    if (nd == 0) throw std::invalid_argument("click_probabilities: no detectors assigned");
    if (nd > 16) throw std::invalid_argument("click_probabilities: too many detectors");
    ClickDistribution dist;
    for (std::size_t i = 0; i < nd; ++i) dist.labels.push_back(map.detector(i).label);
    dist.probability.assign(std::size_t{1} << nd, 0.0);

    std::vector<double> p_click(nd);
    for (const auto& comp : ensemble.components()) {
        map.require_covering(comp.state);
        for (const auto& [occ, amp] : comp.state.amplitudes()) {
            const double p_basis = comp.weight * std::norm(amp);
            if (p_basis <= 0.0) continue;
            for (std::size_t i = 0; i < nd; ++i) {
                const auto& det = map.detector(i);
                const int n = map.photons_at(i, occ);
                const double miss = std::pow(1.0 - det.efficiency, n) * (1.0 - det.dark_prob);
                p_click[i] = 1.0 - miss;
            }
            for (std::size_t mask = 0; mask < dist.probability.size(); ++mask) {
                double p = p_basis;
                for (std::size_t i = 0; i < nd; ++i)
                    p *= (mask & (std::size_t{1} << i)) ? p_click[i] : 1.0 - p_click[i];
                dist.probability[mask] += p;
            }
        }
    }
    return dist;
}

// Probability that both detectors of the pair click within one gate.
inline double coincidence_probability(const MixedEnsemble& ensemble, const std::string& det_a,
                                      const std::string& det_b, const DetectorMap& map) {
    ClickDistribution dist = click_probabilities(ensemble, map);
    return dist.joint_click(map.index_of(det_a), map.index_of(det_b));
}

// Normally-ordered pair rate eta_a eta_b E[n_a n_b]: the coincidence counting
// rate per gate in the gated regime. Ignores dark counts (handled by the
// scenario-level background floor).
inline double pair_rate(const MixedEnsemble& ensemble, const std::string& det_a,
                        const std::string& det_b, const DetectorMap& map) {
    const std::size_t ia = map.index_of(det_a);
    const std::size_t ib = map.index_of(det_b);
    double acc = 0.0;
    for (const auto& comp : ensemble.components()) {
        map.require_covering(comp.state);
        for (const auto& [occ, amp] : comp.state.amplitudes()) {
            const double p = comp.weight * std::norm(amp);
            acc += p * map.photons_at(ia, occ) * map.photons_at(ib, occ);
        }
    }
    return acc * map.detector(ia).efficiency * map.detector(ib).efficiency;
}

// eta E[n] for a single detector.
inline double singles_rate(const MixedEnsemble& ensemble, const std::string& det,
                           const DetectorMap& map) {
    const std::size_t i = map.index_of(det);
    double acc = 0.0;
    for (const auto& comp : ensemble.components()) {
        map.require_covering(comp.state);
        for (const auto& [occ, amp] : comp.state.amplitudes())
            acc += comp.weight * std::norm(amp) * map.photons_at(i, occ);
    }
    return acc * map.detector(i).efficiency;
}

struct CountsRecord {
    double duration_s = 0.0;
    long long trials = 0;
    long long counts = 0;

    double rate() const { return trials > 0 ? static_cast<double>(counts) / trials : 0.0; }
};

// Poisson-sampled counts with mean probability*trials; deterministic per
// seed. Counts are clamped at trials (at most one coincidence per gate).
inline CountsRecord sample_counts(double probability, long long trials, std::uint64_t seed,
                                  double duration_s = 0.0) {
    if (!(probability >= 0.0 && probability <= 1.0))
        throw std::invalid_argument("sample_counts: probability must lie in [0, 1]");
    if (trials <= 0) throw std::invalid_argument("sample_counts: trials must be positive");
    CountsRecord rec;
    rec.duration_s = duration_s;
    rec.trials = trials;
    rec.counts = std::min<long long>(poisson_sample(probability * trials, seed), trials);
    return rec;
}

struct ScanPoint {
    double setting = 0.0;        // theta in rad, or delta_t in ns
    double expected_rate = 0.0;  // per-gate coincidence rate, background included
    long long counts = 0;
    double stderr_counts = 0.0;  // always sqrt(counts)
};

inline ScanPoint make_scan_point(double setting, double expected_rate, long long counts) {
    return ScanPoint{setting, expected_rate, counts, std::sqrt(static_cast<double>(counts))};
}

struct FringeScan {
    std::string setting_name;  // "theta_rad" or "delta_t_ns"
    std::vector<ScanPoint> points;

    bool empty() const { return points.empty(); }
};

// V0 = (Cmax - Cmin) / Cmax, the HOM-dip visibility.
inline double visibility_v0(double c_max, double c_min) {
    if (!(c_max > 0.0)) throw std::invalid_argument("visibility_v0: C_max must be positive");
    return (c_max - c_min) / c_max;
}

// V1 = (Cmax - Cmin) / (Cmax + Cmin), the fringe visibility.
inline double visibility_v1(double c_max, double c_min) {
    if (!(c_max + c_min > 0.0))
        throw std::invalid_argument("visibility_v1: C_max + C_min must be positive");
    return (c_max - c_min) / (c_max + c_min);
}

namespace detail {

inline std::pair<double, double> raw_count_extrema(const FringeScan& scan) {
    if (scan.empty()) throw std::invalid_argument("visibility: empty scan");
    double lo = scan.points.front().counts;
    double hi = lo;
    for (const auto& p : scan.points) {
        lo = std::min(lo, static_cast<double>(p.counts));
        hi = std::max(hi, static_cast<double>(p.counts));
    }
    return {hi, lo};
}

}  // namespace detail

// Raw-extrema estimators over sampled counts; fit-based versions live with
// the fit results.
inline double visibility_v0(const FringeScan& scan) {
    auto [hi, lo] = detail::raw_count_extrema(scan);
    return visibility_v0(hi, lo);
}

inline double visibility_v1(const FringeScan& scan) {
    auto [hi, lo] = detail::raw_count_extrema(scan);
    return visibility_v1(hi, lo);
}

// Ratio of the peak expected rate to the far-wing baseline (mean of the two
// scan endpoints). The scan must extend far enough that the wings sit on the
// distinguishable plateau.
inline double g2_max(const FringeScan& scan) {
    if (scan.points.size() < 3) throw std::invalid_argument("g2_max: need at least 3 scan points");
    double peak = 0.0;
    for (const auto& p : scan.points) peak = std::max(peak, p.expected_rate);
    const double baseline =
        0.5 * (scan.points.front().expected_rate + scan.points.back().expected_rate);
    if (!(baseline > 0.0)) throw std::invalid_argument("g2_max: zero baseline");
    return peak / baseline;
}

}  // namespace noonsim
