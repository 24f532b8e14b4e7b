#pragma once

// Concrete optical components: beam splitters, the quarter/half-wave plates
// and the QWP-HWP-QWP phase module in Jones calculus, temporal-overlap
// distinguishability, the storage/loss channel, and weak coherent states.
//
// Partial distinguishability is represented with "twin" modes: a photon in
// an orthogonal temporal mode occupies a twin rail that sees the same
// spatial optics but never interferes with the matched rail. Detectors sum
// occupations over a rail and its twin.

#include <cmath>
#include <numbers>

#include "noonsim/fock.hpp"
#include "noonsim/mat2.hpp"

namespace noonsim {

using PolarizationMatrix = Mat2;

inline constexpr double kPi = std::numbers::pi;

// Symmetric convention: [[sqrt(1-R), i sqrt(R)], [i sqrt(R), sqrt(1-R)]].
inline Mat2 beam_splitter(double reflectivity) {
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0))
        throw std::invalid_argument("beam_splitter: reflectivity must lie in [0, 1]");
    const double t = std::sqrt(1.0 - reflectivity);
    const double r = std::sqrt(reflectivity);
    Mat2 u;
    u(0, 0) = t;
    u(0, 1) = cxd(0.0, r);
    u(1, 0) = cxd(0.0, r);
    u(1, 1) = t;
    return u;
}

inline Mat2 fifty_fifty() { return beam_splitter(0.5); }

// Quarter-wave plate with fast axis at angle q from vertical:
//   [[i - cos2q, sin2q], [sin2q, i + cos2q]] / sqrt(2)
inline PolarizationMatrix qwp(double q) {
    const double c = std::cos(2.0 * q);
    const double s = std::sin(2.0 * q);
    const double inv = 1.0 / std::sqrt(2.0);
    Mat2 u;
    u(0, 0) = cxd(-c, 1.0) * inv;
    u(0, 1) = cxd(s, 0.0) * inv;
    u(1, 0) = cxd(s, 0.0) * inv;
    u(1, 1) = cxd(c, 1.0) * inv;
    return u;
}

// Half-wave plate at angle theta:
//   [[cos2t, -sin2t], [-sin2t, -cos2t]]   (Hermitian, det -1)
inline PolarizationMatrix hwp(double theta) {
    const double c = std::cos(2.0 * theta);
    const double s = std::sin(2.0 * theta);
    Mat2 u;
    u(0, 0) = c;
    u(0, 1) = -s;
    u(1, 0) = -s;
    u(1, 1) = -c;
    return u;
}

// QWP(q1) -> HWP(theta) -> QWP(q2). With q1 = q2 = pi/4 the module acts on
// |H> as multiplication by -exp(i 2 theta), so the path phase is alpha = 2 theta.
struct PhaseModuleSetting {
    double q1 = kPi / 4.0;
    double theta = 0.0;
    double q2 = kPi / 4.0;

    bool standard_arrangement() const {
        return std::abs(q1 - kPi / 4.0) < 1e-12 && std::abs(q2 - kPi / 4.0) < 1e-12;
    }

    double alpha() const {
        if (!standard_arrangement())
            throw std::domain_error(
                "PhaseModuleSetting::alpha: alpha = 2*theta holds only for q1 = q2 = pi/4");
        return 2.0 * theta;
    }
};

inline PolarizationMatrix phase_module(const PhaseModuleSetting& s) {
    return qwp(s.q2) * hwp(s.theta) * qwp(s.q1);
}

// Multiply each amplitude by exp(i alpha n) where n is the occupation of the
// given mode.
inline StateVector apply_path_phase(const StateVector& state, std::size_t mode, double alpha) {
    if (mode >= state.registry()->size())
        throw std::invalid_argument("apply_path_phase: mode index out of range");
    const cxd phase = std::polar(1.0, alpha);
    StateVector::AmplitudeMap out;
    for (const auto& [occ, a] : state.amplitudes()) out[occ] = a * detail::ipow(phase, occ[mode]);
    return StateVector::unchecked(state.registry(), std::move(out));
}

// Gaussian temporal overlap between the two source photons:
//   xi(dt) = exp(-dt^2 / (2 tau^2)),  xi(0) = 1.
struct OverlapModel {
    double tau_ns = 20.0;
    double delta_t_ns = 0.0;

    double xi() const { return xi_at(delta_t_ns); }

    double xi_at(double dt_ns) const {
        if (!(tau_ns > 0.0)) throw std::invalid_argument("OverlapModel: tau_ns must be positive");
        const double r = dt_ns / tau_ns;
        return std::exp(-0.5 * r * r);
    }
};

// Source of one photon in each of two rails, with twin rails carrying the
// orthogonal-temporal-mode component.
struct PairSource {
    RegistryPtr registry;
    std::size_t mode_a;
    std::size_t mode_b;
    std::size_t twin_a;
    std::size_t twin_b;
};

// Split the |1,1> pair source into an interfering component (weight xi^2)
// and an orthogonal-temporal component (weight 1 - xi^2) where the second
// photon occupies its twin rail. Downstream 50/50 interference then yields
// HOM coincidence (1 - xi^2)/2.
inline MixedEnsemble mix_distinguishability(const PairSource& src, double xi) {
    if (!(xi >= 0.0 && xi <= 1.0))
        throw std::invalid_argument("mix_distinguishability: xi must lie in [0, 1]");
    auto ket = [&](std::size_t first, std::size_t second) {
        Occupation occ(src.registry->size(), 0);
        occ[first] += 1;
        occ[second] += 1;
        return basis_state(src.registry, occ);
    };
    const double w = xi * xi;
    std::vector<WeightedState> comps;
    if (w > 1e-18) comps.push_back({w, ket(src.mode_a, src.mode_b)});
    if (1.0 - w > 1e-18) comps.push_back({1.0 - w, ket(src.mode_a, src.twin_b)});
    return MixedEnsemble(std::move(comps));
}

// Phenomenological storage: each photon in the listed modes survives
// independently with probability beta. With the detection gate enabled,
// non-retrieved light is absorbed (pure loss, enumerated exactly over loss
// patterns); with the gate disabled leaked light still reaches the
// detectors, i.e. the channel is transparent for counting purposes.
struct MemoryChannel {
    double beta = 0.2;
    double storage_time_ns = 100.0;
    bool gate_enabled = true;
};

namespace detail {

inline void enumerate_loss_patterns(const StateVector& state, const std::vector<std::size_t>& modes,
                                    double beta, std::vector<WeightedState>& out) {
    std::vector<int> max_occ(modes.size(), 0);
    for (const auto& [occ, a] : state.amplitudes())
        for (std::size_t i = 0; i < modes.size(); ++i)
            max_occ[i] = std::max(max_occ[i], occ[modes[i]]);

    std::vector<int> pattern(modes.size(), 0);
    const double keep = beta;
    const double lose = 1.0 - beta;
    // Iterate over all loss patterns (photons lost per listed mode).
    while (true) {
        StateVector::AmplitudeMap branch;
        for (const auto& [occ, a] : state.amplitudes()) {
            cxd coeff = a;
            bool feasible = true;
            Occupation dst = occ;
            for (std::size_t i = 0; i < modes.size(); ++i) {
                const int n = occ[modes[i]];
                const int l = pattern[i];
                if (l > n) {
                    feasible = false;
                    break;
                }
                coeff *= std::sqrt(binomial(n, l) * std::pow(keep, n - l) * std::pow(lose, l));
                dst[modes[i]] = n - l;
            }
            if (feasible && std::abs(coeff) > 0.0) branch[dst] += coeff;
        }
        if (!branch.empty()) {
            StateVector s = StateVector::unchecked(state.registry(), std::move(branch));
            const double w = s.norm_squared();
            if (w > 1e-18) out.push_back({w, normalize(s)});
        }
        // Next pattern.
        std::size_t i = 0;
        for (; i < modes.size(); ++i) {
            if (pattern[i] < max_occ[i]) {
                ++pattern[i];
                break;
            }
            pattern[i] = 0;
        }
        if (i == modes.size()) break;
    }
}

}  // namespace detail

inline MixedEnsemble memory_apply(const MixedEnsemble& ensemble, const MemoryChannel& channel,
                                  const std::vector<std::size_t>& modes) {
    if (!(channel.beta >= 0.0 && channel.beta <= 1.0))
        throw std::invalid_argument("memory_apply: beta must lie in [0, 1]");
    for (std::size_t m : modes)
        if (m >= ensemble.registry()->size())
            throw std::invalid_argument("memory_apply: mode index out of range");
    if (!channel.gate_enabled || modes.empty()) return ensemble;
    return ensemble.branch([&](const StateVector& s) {
        std::vector<WeightedState> subs;
        detail::enumerate_loss_patterns(s, modes, channel.beta, subs);
        return subs;
    });
}

// Truncated, renormalized coherent state sum_n e^{-|a|^2/2} a^n/sqrt(n!) |n>
// in one mode. Refuses amplitudes whose truncated tail mass reaches 1e-6.
inline StateVector weak_coherent_state(cxd amplitude, const RegistryPtr& registry, std::size_t mode) {
    if (mode >= registry->size())
        throw std::invalid_argument("weak_coherent_state: mode index out of range");
    const int cap = registry->max_total_photons();
    const double mean = std::norm(amplitude);
    StateVector::AmplitudeMap amps;
    double mass = 0.0;
    for (int n = 0; n <= cap; ++n) {
        const cxd c = std::exp(-0.5 * mean) * detail::ipow(amplitude, n) /
                      std::sqrt(detail::factorial(n));
        Occupation occ(registry->size(), 0);
        occ[mode] = n;
        amps[occ] = c;
        mass += std::norm(c);
    }
    if (1.0 - mass >= 1e-6)
        throw std::invalid_argument(
            "weak_coherent_state: truncated tail mass >= 1e-6; raise max_total_photons or lower the amplitude");
    return normalize(StateVector::unchecked(registry, std::move(amps)));
}

// Which-path dephasing: splits every component into occupation sectors of
// the given mode, destroying coherence between them. Used for the
// non-interfering part of an imperfectly mode-matched interferometer.
inline MixedEnsemble decohere_mode(const MixedEnsemble& ensemble, std::size_t mode) {
    if (mode >= ensemble.registry()->size())
        throw std::invalid_argument("decohere_mode: mode index out of range");
    return ensemble.branch([&](const StateVector& s) {
        std::vector<WeightedState> subs;
        int max_n = 0;
        for (const auto& [occ, a] : s.amplitudes()) max_n = std::max(max_n, occ[mode]);
        for (int n = 0; n <= max_n; ++n) {
            StateVector::AmplitudeMap sector;
            double w = 0.0;
            for (const auto& [occ, a] : s.amplitudes())
                if (occ[mode] == n) {
                    sector[occ] = a;
                    w += std::norm(a);
                }
            if (!sector.empty() && w > 1e-18)
                subs.push_back(
                    {w, normalize(StateVector::unchecked(s.registry(), std::move(sector)))});
        }
        return subs;
    });
}

// Lift applied to every ensemble component.
inline MixedEnsemble ensemble_mode_pair_unitary(const MixedEnsemble& e, std::size_t a, std::size_t b,
                                                const Mat2& u) {
    return e.map([&](const StateVector& s) { return apply_mode_pair_unitary(s, a, b, u); });
}

inline MixedEnsemble ensemble_path_phase(const MixedEnsemble& e, std::size_t mode, double alpha) {
    return e.map([&](const StateVector& s) { return apply_path_phase(s, mode, alpha); });
}

}  // namespace noonsim
