#pragma once

// Multi-mode bosonic pure states in a truncated occupation-number basis.
//
// States are sparse maps from occupation vectors to complex amplitudes,
// ordered lexicographically. 2x2 mode transformations are lifted to Fock
// space by creation-operator substitution with the usual sqrt(n!) factors.
// Mixtures (loss channels, partial distinguishability) are explicit
// weighted ensembles of pure states, never density matrices.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "noonsim/mat2.hpp"

namespace noonsim {

using Occupation = std::vector<int>;

// Tolerances: algebraic identities vs exact-zero claims.
inline constexpr double kAlgebraTol = 1e-10;
inline constexpr double kExactZeroTol = 1e-12;

namespace detail {

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double b = 1.0;
    for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
    return b;
}

// Integer power by repeated multiplication; std::pow(complex, 0) is not safe
// for a zero base.
inline cxd ipow(cxd base, int n) {
    cxd r(1.0);
    for (int i = 0; i < n; ++i) r *= base;
    return r;
}

}  // namespace detail

class ModeRegistry {
public:
    ModeRegistry(std::vector<std::string> labels, int max_total_photons)
        : labels_(std::move(labels)), max_total_(max_total_photons) {
        if (max_total_ < 2)
            throw std::invalid_argument("ModeRegistry: max_total_photons must be >= 2");
        if (labels_.empty())
            throw std::invalid_argument("ModeRegistry: at least one mode label required");
        for (std::size_t i = 0; i < labels_.size(); ++i)
            for (std::size_t j = i + 1; j < labels_.size(); ++j)
                if (labels_[i] == labels_[j])
                    throw std::invalid_argument("ModeRegistry: duplicate mode label '" + labels_[i] + "'");
    }

    std::size_t size() const { return labels_.size(); }
    int max_total_photons() const { return max_total_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }

    std::size_t index_of(const std::string& label) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == label) return i;
        throw std::invalid_argument("ModeRegistry: unknown mode '" + label + "'");
    }

    bool operator==(const ModeRegistry& other) const {
        return labels_ == other.labels_ && max_total_ == other.max_total_;
    }

private:
    std::vector<std::string> labels_;
    int max_total_;
};

using RegistryPtr = std::shared_ptr<const ModeRegistry>;

inline RegistryPtr make_registry(std::vector<std::string> labels, int max_total_photons) {
    return std::make_shared<const ModeRegistry>(std::move(labels), max_total_photons);
}

inline void require_same_registry(const RegistryPtr& a, const RegistryPtr& b, const char* what) {
    if (a == b) return;
    if (!a || !b || !(*a == *b))
        throw std::invalid_argument(std::string(what) + ": states belong to different mode registries");
}

// Per-mode occupation constraints; modes without a bound are unconstrained.
// An empty pattern matches everything.
class OccupationPattern {
public:
    static OccupationPattern any() { return OccupationPattern{}; }

    static OccupationPattern exactly(std::size_t mode, int n) {
        return OccupationPattern{}.require_exactly(mode, n);
    }

    OccupationPattern& require_exactly(std::size_t mode, int n) { return require_between(mode, n, n); }

    OccupationPattern& require_at_least(std::size_t mode, int n) {
        return require_between(mode, n, kNoUpperBound);
    }

    OccupationPattern& require_between(std::size_t mode, int lo, int hi) {
        bounds_.push_back(Bound{mode, lo, hi});
        return *this;
    }

    void validate(const ModeRegistry& registry) const {
        for (const Bound& b : bounds_) {
            if (b.mode >= registry.size())
                throw std::invalid_argument("OccupationPattern: mode index out of range");
            if (b.lo < 0 || b.hi < b.lo)
                throw std::invalid_argument("OccupationPattern: malformed bound (lo " +
                                            std::to_string(b.lo) + ", hi " + std::to_string(b.hi) + ")");
        }
    }

    bool matches(const Occupation& occ) const {
        for (const Bound& b : bounds_) {
            int n = occ[b.mode];
            if (n < b.lo || n > b.hi) return false;
        }
        return true;
    }

private:
    static constexpr int kNoUpperBound = 1 << 20;
    struct Bound {
        std::size_t mode;
        int lo;
        int hi;
    };
    std::vector<Bound> bounds_;
};

class StateVector {
public:
    using AmplitudeMap = std::map<Occupation, cxd>;

    const RegistryPtr& registry() const { return registry_; }
    const AmplitudeMap& amplitudes() const { return amps_; }

    double norm_squared() const {
        double s = 0.0;
        for (const auto& [occ, a] : amps_) s += std::norm(a);
        return s;
    }

    double norm() const { return std::sqrt(norm_squared()); }

    cxd amplitude(const Occupation& occ) const {
        auto it = amps_.find(occ);
        return it == amps_.end() ? cxd(0.0) : it->second;
    }

    int total_photons_max() const {
        int t = 0;
        for (const auto& [occ, a] : amps_) {
            int s = 0;
            for (int n : occ) s += n;
            t = std::max(t, s);
        }
        return t;
    }

    std::string to_string() const {
        std::ostringstream os;
        bool first = true;
        for (const auto& [occ, a] : amps_) {
            if (!first) os << " + ";
            first = false;
            os << "(" << a.real() << (a.imag() < 0 ? "-" : "+") << std::abs(a.imag()) << "i)|";
            for (std::size_t i = 0; i < occ.size(); ++i) os << (i ? "," : "") << occ[i];
            os << ">";
        }
        return os.str();
    }

    // Construction without validation or normalization, for internal math on
    // branch amplitudes. Public entry point is make_state().
    static StateVector unchecked(RegistryPtr registry, AmplitudeMap amps) {
        StateVector s;
        s.registry_ = std::move(registry);
        s.amps_ = std::move(amps);
        return s;
    }

private:
    StateVector() = default;
    RegistryPtr registry_;
    AmplitudeMap amps_;
};

inline void require_normalized(const StateVector& state, const char* what) {
    if (std::abs(state.norm_squared() - 1.0) > 1e-8)
        throw std::invalid_argument(std::string(what) + ": state is not normalized");
}

inline StateVector normalize(const StateVector& state) {
    double n = state.norm();
    if (n < 1e-150) throw std::invalid_argument("normalize: zero-norm state");
    StateVector::AmplitudeMap out;
    for (const auto& [occ, a] : state.amplitudes()) out[occ] = a / n;
    return StateVector::unchecked(state.registry(), std::move(out));
}

inline StateVector make_state(const RegistryPtr& registry,
                              const std::vector<std::pair<Occupation, cxd>>& terms) {
    if (!registry) throw std::invalid_argument("make_state: null registry");
    if (terms.empty()) throw std::invalid_argument("make_state: empty term list");
    StateVector::AmplitudeMap amps;
    for (const auto& [occ, amp] : terms) {
        if (occ.size() != registry->size())
            throw std::invalid_argument("make_state: occupation length does not match registry size");
        int total = 0;
        for (int n : occ) {
            if (n < 0) throw std::invalid_argument("make_state: negative occupation");
            total += n;
        }
        if (total > registry->max_total_photons())
            throw std::invalid_argument("make_state: basis state exceeds max_total_photons truncation");
        if (!amps.emplace(occ, amp).second)
            throw std::invalid_argument("make_state: duplicate basis entry");
    }
    return normalize(StateVector::unchecked(registry, std::move(amps)));
}

// Convenience: single basis ket.
inline StateVector basis_state(const RegistryPtr& registry, const Occupation& occ) {
    return make_state(registry, {{occ, cxd(1.0)}});
}

namespace detail {

// Drop amplitudes that are pure floating-point residue relative to the
// largest amplitude in the map.
inline void prune_relative(StateVector::AmplitudeMap& amps, double rel = 1e-15) {
    double peak = 0.0;
    for (const auto& [occ, a] : amps) peak = std::max(peak, std::abs(a));
    double cut = peak * rel;
    for (auto it = amps.begin(); it != amps.end();) {
        if (std::abs(it->second) <= cut)
            it = amps.erase(it);
        else
            ++it;
    }
}

}  // namespace detail

// Lift a 2x2 unitary acting on (mode_a, mode_b) to Fock space:
//   a+ -> u11 a+ + u21 b+,  b+ -> u12 a+ + u22 b+
// Photon number is conserved, so truncation cannot be exceeded for valid input.
inline StateVector apply_mode_pair_unitary(const StateVector& state, std::size_t mode_a,
                                           std::size_t mode_b, const Mat2& u) {
    const auto& reg = state.registry();
    if (mode_a >= reg->size() || mode_b >= reg->size())
        throw std::invalid_argument("apply_mode_pair_unitary: mode index out of range");
    if (mode_a == mode_b)
        throw std::invalid_argument("apply_mode_pair_unitary: modes must be distinct");
    require_unitary(u, "apply_mode_pair_unitary");

    StateVector::AmplitudeMap out;
    for (const auto& [occ, amp] : state.amplitudes()) {
        const int na = occ[mode_a];
        const int nb = occ[mode_b];
        if (na + nb == 0) {
            out[occ] += amp;
            continue;
        }
        const double denom = std::sqrt(detail::factorial(na) * detail::factorial(nb));
        // (u11 a+ + u21 b+)^na (u12 a+ + u22 b+)^nb, collected by the photon
        // count p landing in mode_a.
        for (int j = 0; j <= na; ++j) {
            const cxd fa =
                detail::binomial(na, j) * detail::ipow(u(0, 0), j) * detail::ipow(u(1, 0), na - j);
            for (int k = 0; k <= nb; ++k) {
                const cxd fb =
                    detail::binomial(nb, k) * detail::ipow(u(0, 1), k) * detail::ipow(u(1, 1), nb - k);
                const int p = j + k;
                const int q = na + nb - p;
                Occupation dst = occ;
                dst[mode_a] = p;
                dst[mode_b] = q;
                const double num = std::sqrt(detail::factorial(p) * detail::factorial(q));
                out[dst] += amp * fa * fb * (num / denom);
            }
        }
    }
    detail::prune_relative(out);
    StateVector result = StateVector::unchecked(reg, std::move(out));
    if (std::abs(result.norm_squared() - state.norm_squared()) > kAlgebraTol)
        throw std::logic_error("apply_mode_pair_unitary: norm not preserved (registry misconfiguration?)");
    return result;
}

inline double occupation_probability(const StateVector& state, const OccupationPattern& pattern) {
    require_normalized(state, "occupation_probability");
    pattern.validate(*state.registry());
    double p = 0.0;
    for (const auto& [occ, a] : state.amplitudes())
        if (pattern.matches(occ)) p += std::norm(a);
    return std::min(p, 1.0);
}

struct ProjectionOutcome {
    double probability = 0.0;
    std::optional<StateVector> state;  // empty when the projection has no support
};

inline ProjectionOutcome project(const StateVector& state, const OccupationPattern& pattern) {
    require_normalized(state, "project");
    pattern.validate(*state.registry());
    StateVector::AmplitudeMap kept;
    double p = 0.0;
    for (const auto& [occ, a] : state.amplitudes())
        if (pattern.matches(occ)) {
            kept[occ] = a;
            p += std::norm(a);
        }
    if (kept.empty() || p < 1e-30) return {0.0, std::nullopt};
    return {p, normalize(StateVector::unchecked(state.registry(), std::move(kept)))};
}

// Tensor product; registries are concatenated (labels must stay unique) and
// truncation bounds add.
inline StateVector tensor(const StateVector& a, const StateVector& b) {
    std::vector<std::string> labels = a.registry()->labels();
    for (const auto& l : b.registry()->labels()) labels.push_back(l);
    auto reg = make_registry(std::move(labels),
                             a.registry()->max_total_photons() + b.registry()->max_total_photons());
    StateVector::AmplitudeMap out;
    for (const auto& [oa, ca] : a.amplitudes())
        for (const auto& [ob, cb] : b.amplitudes()) {
            Occupation occ = oa;
            occ.insert(occ.end(), ob.begin(), ob.end());
            out[occ] = ca * cb;
        }
    return StateVector::unchecked(std::move(reg), std::move(out));
}

struct WeightedState {
    double weight;
    StateVector state;
};

// Weighted list of pure states sharing one registry. Weights are
// probabilities summing to 1.
class MixedEnsemble {
public:
    static MixedEnsemble pure(StateVector state) {
        MixedEnsemble e;
        e.components_.push_back({1.0, std::move(state)});
        return e;
    }

    explicit MixedEnsemble(std::vector<WeightedState> components)
        : components_(std::move(components)) {
        validate();
    }

    const std::vector<WeightedState>& components() const { return components_; }
    const RegistryPtr& registry() const { return components_.front().state.registry(); }

    double weight_sum() const {
        double s = 0.0;
        for (const auto& c : components_) s += c.weight;
        return s;
    }

    // Apply a pure-state map to every component.
    template <class F>
    MixedEnsemble map(F&& f) const {
        MixedEnsemble out;
        out.components_.reserve(components_.size());
        for (const auto& c : components_) out.components_.push_back({c.weight, f(c.state)});
        return out;
    }

    // Replace each component by sub-branches whose weights are relative to it.
    template <class F>
    MixedEnsemble branch(F&& f) const {
        MixedEnsemble out;
        for (const auto& c : components_) {
            std::vector<WeightedState> subs = f(c.state);
            for (auto& s : subs) {
                double w = c.weight * s.weight;
                if (w > 1e-18) out.components_.push_back({w, std::move(s.state)});
            }
        }
        if (out.components_.empty())
            throw std::logic_error("MixedEnsemble::branch produced an empty ensemble");
        return out;
    }

    void validate() const {
        if (components_.empty()) throw std::invalid_argument("MixedEnsemble: no components");
        for (const auto& c : components_) {
            if (c.weight < 0.0) throw std::invalid_argument("MixedEnsemble: negative weight");
            require_same_registry(c.state.registry(), components_.front().state.registry(),
                                  "MixedEnsemble");
        }
        if (std::abs(weight_sum() - 1.0) > 1e-10)
            throw std::invalid_argument("MixedEnsemble: weights do not sum to 1");
    }

private:
    MixedEnsemble() = default;
    std::vector<WeightedState> components_;
};

}  // namespace noonsim
