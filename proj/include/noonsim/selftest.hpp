#pragma once

// Built-in verification suite behind the `selftest` subcommand, plus the
// dense brute-force oracle it checks the Fock lifting against.
//
// The oracle computes lifted amplitudes from matrix permanents,
//   <out| Phi(U) |in> = Per(U[out|in]) / sqrt(prod in! prod out!),
// and shares no code with the creation-operator substitution it validates.

#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "noonsim/scenarios.hpp"

namespace noonsim {

namespace oracle {

using CMatrix = std::vector<std::vector<cxd>>;

inline cxd permanent(const CMatrix& m) {
    const std::size_t n = m.size();
    if (n == 0) return cxd(1.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    cxd total(0.0);
    do {
        cxd term(1.0);
        for (std::size_t i = 0; i < n; ++i) term *= m[i][perm[i]];
        total += term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

// Expand a mode-basis matrix by repeating row i out[i] times and column j
// in[j] times.
inline CMatrix repeated_submatrix(const CMatrix& u, const Occupation& out, const Occupation& in) {
    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < out.size(); ++i)
        for (int r = 0; r < out[i]; ++r) rows.push_back(i);
    for (std::size_t j = 0; j < in.size(); ++j)
        for (int r = 0; r < in[j]; ++r) cols.push_back(j);
    CMatrix sub(rows.size(), std::vector<cxd>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) sub[r][c] = u[rows[r]][cols[c]];
    return sub;
}

inline cxd lifted_amplitude(const CMatrix& u, const Occupation& out, const Occupation& in) {
    int tin = 0, tout = 0;
    for (int v : in) tin += v;
    for (int v : out) tout += v;
    if (tin != tout) return cxd(0.0);
    double fact = 1.0;
    for (int v : in) fact *= detail::factorial(v);
    for (int v : out) fact *= detail::factorial(v);
    return permanent(repeated_submatrix(u, out, in)) / std::sqrt(fact);
}

// Embed a 2x2 block acting on (a, b) into an m-mode identity.
inline CMatrix embed_pair(std::size_t m, std::size_t a, std::size_t b, const Mat2& u) {
    CMatrix full(m, std::vector<cxd>(m, cxd(0.0)));
    for (std::size_t i = 0; i < m; ++i) full[i][i] = 1.0;
    full[a][a] = u(0, 0);
    full[a][b] = u(0, 1);
    full[b][a] = u(1, 0);
    full[b][b] = u(1, 1);
    return full;
}

inline std::vector<Occupation> enumerate_basis(std::size_t modes, int max_total) {
    std::vector<Occupation> out;
    Occupation occ(modes, 0);
    while (true) {
        int total = 0;
        for (int v : occ) total += v;
        if (total <= max_total) out.push_back(occ);
        std::size_t i = 0;
        for (; i < modes; ++i) {
            if (occ[i] < max_total) {
                ++occ[i];
                break;
            }
            occ[i] = 0;
        }
        if (i == modes) break;
    }
    return out;
}

// Exhaustive comparison of the implementation lifting against the permanent
// oracle; returns the max absolute amplitude deviation.
inline double max_lift_deviation(std::size_t modes, int max_total, std::size_t a, std::size_t b,
                                 const Mat2& u) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < modes; ++i) labels.push_back("m" + std::to_string(i));
    auto reg = make_registry(labels, max_total);
    const CMatrix full = embed_pair(modes, a, b, u);
    const auto basis = enumerate_basis(modes, max_total);
    double worst = 0.0;
    for (const auto& in : basis) {
        const StateVector lifted = apply_mode_pair_unitary(basis_state(reg, in), a, b, u);
        for (const auto& out : basis) {
            const cxd want = lifted_amplitude(full, out, in);
            const cxd got = lifted.amplitude(out);
            worst = std::max(worst, std::abs(want - got));
        }
    }
    return worst;
}

// Haar-ish random U(2) from an explicit parameterization (exactly unitary).
inline Mat2 random_unitary(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
    const double phi = ang(rng), psi = ang(rng), chi = ang(rng);
    const double t = std::acos(std::sqrt(std::uniform_real_distribution<double>(0.0, 1.0)(rng)));
    Mat2 u;
    u(0, 0) = std::polar(std::cos(t), psi);
    u(0, 1) = std::polar(std::sin(t), chi);
    u(1, 0) = -std::polar(std::sin(t), -chi);
    u(1, 1) = std::polar(std::cos(t), -psi);
    const cxd g = std::polar(1.0, phi);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) u(r, c) *= g;
    return u;
}

}  // namespace oracle

// Identity and consistency checks suitable for a quick post-install run.
// Prints one PASS/FAIL line per check; returns true when all pass.
inline bool run_selftest(std::ostream& os) {
    int failures = 0;
    auto report = [&](const char* name, bool ok, double metric) {
        os << (ok ? "[PASS] " : "[FAIL] ") << name << " (metric " << std::scientific
           << std::setprecision(3) << metric << ")\n";
        if (!ok) ++failures;
    };

    {  // lifting vs permanent oracle, 2 and 3 modes up to 4 photons
        std::mt19937_64 rng(7);
        double worst = 0.0;
        worst = std::max(worst, oracle::max_lift_deviation(2, 4, 0, 1, fifty_fifty()));
        worst = std::max(worst, oracle::max_lift_deviation(3, 4, 0, 2, oracle::random_unitary(rng)));
        worst = std::max(worst, oracle::max_lift_deviation(3, 3, 1, 2, oracle::random_unitary(rng)));
        report("fock lifting matches permanent oracle", worst < 1e-10, worst);
    }
    {  // HOM null and distinguishable plateau
        auto reg = make_registry({"a", "b"}, 2);
        auto out = apply_mode_pair_unitary(basis_state(reg, {1, 1}), 0, 1, fifty_fifty());
        const double coinc =
            occupation_probability(out, OccupationPattern::exactly(0, 1).require_exactly(1, 1));
        report("HOM coincidence null", coinc < 1e-12, coinc);

        ExperimentConfig cfg;
        cfg.mode_mismatch = 1.0;
        cfg.fill_default_grids();
        detail::PairRig rig;
        const double base = detail::hom_expected_rate(cfg, rig, 1e6);
        report("distinguishable plateau 0.5", std::abs(base - 0.5) < 1e-9, std::abs(base - 0.5));
    }
    {  // phase-module identity
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double theta = ang(rng);
            const auto u = phase_module({kPi / 4.0, theta, kPi / 4.0});
            const auto v = u * std::array<cxd, 2>{1.0, 0.0};
            const cxd want = -std::polar(1.0, 2.0 * theta);
            worst = std::max({worst, std::abs(v[0] - want), std::abs(v[1])});
        }
        report("phase module -exp(i 2 theta) identity", worst < 1e-12, worst);
    }
    {  // fringe laws on a quick grid
        auto law_dev = [](SourceKind src, DetectorPair det, int k, bool squared) {
            ExperimentConfig cfg;
            cfg.source = src;
            cfg.detectors = det;
            cfg.mode_mismatch = 1.0;
            cfg.theta_grid = ExperimentConfig::default_theta_grid(16);
            cfg.fill_default_grids();
            detail::FringeRig rig(cfg);
            double peak = 0.0, worst = 0.0;
            std::vector<double> rates, laws;
            for (double th : cfg.theta_grid) {
                rates.push_back(detail::fringe_expected_rate(cfg, rig, th));
                const double base = (1.0 - std::cos(2.0 * k * th)) / 2.0;
                laws.push_back(squared ? base * base : base);
                peak = std::max(peak, laws.back());
            }
            double scale = 0.0, scale_den = 0.0;
            for (std::size_t i = 0; i < rates.size(); ++i) {
                scale += rates[i] * laws[i];
                scale_den += laws[i] * laws[i];
            }
            scale /= scale_den;
            for (std::size_t i = 0; i < rates.size(); ++i)
                worst = std::max(worst, std::abs(rates[i] - scale * laws[i]) / (scale * peak));
            return worst;
        };
        const double d1 = law_dev(SourceKind::single, DetectorPair::d1d2, 1, false);
        const double d2 = law_dev(SourceKind::noon, DetectorPair::d1d2, 2, false);
        const double d3 = law_dev(SourceKind::coherent, DetectorPair::d3d4, 1, true);
        const double worst = std::max({d1, d2, d3});
        report("fringe laws (single, NOON, coherent)", worst < 1e-9, worst);
    }
    {  // ideal g2 peak
        ExperimentConfig cfg;
        cfg.mode_mismatch = 1.0;
        ScenarioResult res = run_fock_peak_scan(cfg);
        report("ideal g2 peak ratio 2", std::abs(res.g2_ratio - 2.0) < 1e-6,
               std::abs(res.g2_ratio - 2.0));
    }
    {  // storage pair efficiency beta^2
        ExperimentConfig cfg;
        cfg.mode_mismatch = 1.0;
        cfg.theta_grid = ExperimentConfig::default_theta_grid(9);
        detail::FringeRig rig(cfg);
        const double th = kPi / 4.0;
        ExperimentConfig after = cfg;
        after.stage = Stage::after;
        const double r0 = detail::fringe_expected_rate(cfg, rig, th);
        const double r1 = detail::fringe_expected_rate(after, rig, th);
        const double dev = std::abs(r1 / r0 - after.beta * after.beta);
        report("after/before rate ratio beta^2", dev < 1e-10, dev);
    }
    {  // Poisson sampler determinism and scale
        const long long a = poisson_sample(400.0, 42);
        const long long b = poisson_sample(400.0, 42);
        double mean = 0.0;
        for (int i = 0; i < 1000; ++i) mean += poisson_sample(400.0, derive_seed(5, i));
        mean /= 1000.0;
        const bool ok = (a == b) && std::abs(mean - 400.0) < 3.0;
        report("poisson sampler deterministic and unbiased", ok, std::abs(mean - 400.0));
    }

    os << (failures == 0 ? "selftest: all checks passed\n"
                         : "selftest: " + std::to_string(failures) + " check(s) failed\n");
    return failures == 0;
}

}  // namespace noonsim
