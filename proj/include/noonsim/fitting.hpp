#pragma once

// Weighted nonlinear least squares for the fringe and dip models:
//   cosine_k:        A (1 - cos(2 k theta - phi)) / 2 + B
//   cosine_squared:  A (1 - cos(2 theta - phi))^2 / 4 + B
//   gaussian_dip:    C (1 - V exp(-dt^2 / tau^2))
// plus a free-frequency cosine fit used to measure super-resolution.
//
// Damped normal equations, max 200 iterations, convergence when the
// relative parameter change drops below 1e-9. Weights are 1/sigma^2 with a
// floor of one count. Parameter errors come from the unscaled inverse of
// the weighted normal matrix.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "noonsim/detection.hpp"

namespace noonsim {

enum class FitModel { cosine_k, cosine_squared, gaussian_dip };

namespace detail {

inline constexpr double kPiFit = std::numbers::pi;

// levenberg() stores the covariance of its last fit here for visibility
// error propagation; fitting is single-threaded per thread.
inline thread_local std::vector<std::vector<double>> covariance_;

using ModelFn = std::function<double(double, const std::vector<double>&)>;
using GradFn = std::function<void(double, const std::vector<double>&, std::vector<double>&)>;

// Solve a (symmetric, small) linear system in place by Gaussian elimination
// with partial pivoting. Returns false when singular.
inline bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                         std::vector<double>& out) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * out[c];
        out[i] = s / a[i][i];
    }
    return true;
}

inline bool invert_spd(const std::vector<std::vector<double>>& a,
                       std::vector<std::vector<double>>& inv) {
    const std::size_t n = a.size();
    inv.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> e(n, 0.0);
        e[c] = 1.0;
        std::vector<double> col;
        if (!solve_linear(a, e, col)) return false;
        for (std::size_t r = 0; r < n; ++r) inv[r][c] = col[r];
    }
    return true;
}

struct LMOutcome {
    std::vector<double> params;
    std::vector<double> errors;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline double chi_squared(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& w, const std::vector<double>& p,
                          const ModelFn& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f(x[i], p);
        s += w[i] * r * r;
    }
    return s;
}

inline LMOutcome levenberg(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& w, std::vector<double> p, const ModelFn& f,
                           const GradFn& g, int max_iter = 200, double rel_tol = 1e-9) {
    const std::size_t np = p.size();
    LMOutcome out;
    double lambda = 1e-3;
    double chi2 = chi_squared(x, y, w, p, f);
    std::vector<double> grad_buf(np);

    auto normal_matrix = [&](const std::vector<double>& params,
                             std::vector<std::vector<double>>& jtj, std::vector<double>& jtr) {
        jtj.assign(np, std::vector<double>(np, 0.0));
        jtr.assign(np, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            g(x[i], params, grad_buf);
            const double r = y[i] - f(x[i], params);
            for (std::size_t a = 0; a < np; ++a) {
                jtr[a] += w[i] * grad_buf[a] * r;
                for (std::size_t b = a; b < np; ++b) jtj[a][b] += w[i] * grad_buf[a] * grad_buf[b];
            }
        }
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];
    };

    std::vector<std::vector<double>> jtj;
    std::vector<double> jtr;
    for (int iter = 0; iter < max_iter; ++iter) {
        out.iterations = iter + 1;
        normal_matrix(p, jtj, jtr);
        auto damped = jtj;
        for (std::size_t a = 0; a < np; ++a)
            damped[a][a] += lambda * std::max(jtj[a][a], 1e-12);
        std::vector<double> step;
        if (!solve_linear(damped, jtr, step)) {
            lambda *= 10.0;
            if (lambda > 1e14) {
                out.converged = true;  // stalled at a stationary point
                break;
            }
            continue;
        }
        std::vector<double> trial(np);
        for (std::size_t a = 0; a < np; ++a) trial[a] = p[a] + step[a];
        const double trial_chi2 = chi_squared(x, y, w, trial, f);
        if (trial_chi2 <= chi2) {
            double rel = 0.0;
            for (std::size_t a = 0; a < np; ++a)
                rel = std::max(rel, std::abs(step[a]) / std::max(std::abs(trial[a]), 1e-12));
            p = trial;
            chi2 = trial_chi2;
            lambda = std::max(lambda * 0.1, 1e-12);
            if (rel < rel_tol) {
                out.converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e14) {
                out.converged = true;
                break;
            }
        }
    }

    out.params = p;
    out.chi2 = chi2;
    out.errors.assign(np, std::numeric_limits<double>::quiet_NaN());
    normal_matrix(p, jtj, jtr);
    std::vector<std::vector<double>> cov;
    if (invert_spd(jtj, cov)) {
        out.errors.resize(np);
        for (std::size_t a = 0; a < np; ++a)
            out.errors[a] = cov[a][a] > 0.0 ? std::sqrt(cov[a][a]) : 0.0;
        covariance_ = cov;
    }
    return out;
}

}  // namespace detail

struct FitResult {
    FitModel model = FitModel::cosine_k;
    double amplitude = 0.0;           // A, or V0 for the dip
    double offset = 0.0;              // B, or C_infinity for the dip
    double phase_origin = 0.0;        // phi (cosine models only)
    double width_or_frequency = 0.0;  // 2k for cosine models, tau for the dip
    double amplitude_err = 0.0;
    double offset_err = 0.0;
    double phase_err = 0.0;
    double width_err = 0.0;
    double residual_rms = 0.0;  // unweighted, in the units of the fitted values
    int iterations = 0;
    double visibility = 0.0;
    double visibility_err = 0.0;

    double eval(double x) const {
        switch (model) {
            case FitModel::cosine_k: {
                const double u = width_or_frequency * x - phase_origin;
                return amplitude * (1.0 - std::cos(u)) / 2.0 + offset;
            }
            case FitModel::cosine_squared: {
                const double u = 2.0 * x - phase_origin;
                const double q = 1.0 - std::cos(u);
                return amplitude * q * q / 4.0 + offset;
            }
            case FitModel::gaussian_dip: {
                const double e = std::exp(-x * x / (width_or_frequency * width_or_frequency));
                return offset * (1.0 - amplitude * e);
            }
        }
        return 0.0;
    }
};

namespace detail {

inline void check_fringe_preconditions(const std::vector<double>& x, int k) {
    if (x.size() < 8) throw std::invalid_argument("fit_fringe: need at least 8 points");
    double lo = x.front(), hi = x.front();
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double period = 2.0 * kPiFit / (2.0 * k);
    if (hi - lo < period * (1.0 - 1e-9))
        throw std::invalid_argument("fit_fringe: scan does not span one fringe period");
}

inline std::vector<double> weights_from_sigma(const std::vector<double>& sigma) {
    std::vector<double> w(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const double s = std::max(sigma[i], 1.0);  // weight floor: one count
        w[i] = 1.0 / (s * s);
    }
    return w;
}

inline std::size_t argmin(const std::vector<double>& y) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (y[i] < y[best]) best = i;
    return best;
}

inline double unweighted_rms(const std::vector<double>& x, const std::vector<double>& y,
                             const FitResult& fit) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.eval(x[i]);
        s += r * r;
    }
    return std::sqrt(s / x.size());
}

inline void finish_visibility_cosine(FitResult& fit) {
    const double a = fit.amplitude;
    const double b = fit.offset;
    const double denom = a + 2.0 * b;
    if (std::abs(denom) < 1e-300) throw std::runtime_error("fit visibility: degenerate A + 2B");
    fit.visibility = a / denom;
    // Delta method with the (A, B) covariance block.
    const double da = 2.0 * b / (denom * denom);
    const double db = -2.0 * a / (denom * denom);
    const auto& cov = covariance_;
    if (cov.size() >= 2)
        fit.visibility_err =
            std::sqrt(std::max(0.0, da * da * cov[0][0] + db * db * cov[1][1] +
                                        2.0 * da * db * cov[0][1]));
    if (fit.visibility < -0.05 || fit.visibility > 1.05)
        throw std::runtime_error("fit visibility outside [-0.05, 1.05]");
}

}  // namespace detail

// Fixed-frequency fringe fit. k is the frequency multiplier (1: single
// photon, 2: NOON); the cosine_squared model ignores k (its law is fixed at
// 2 theta). Values y and sigma are in counts (or any common unit).
inline FitResult fit_fringe_values(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& sigma, int k, FitModel model) {
    if (model == FitModel::gaussian_dip)
        throw std::invalid_argument("fit_fringe_values: use fit_gaussian_dip for dip scans");
    if (k != 1 && k != 2) throw std::invalid_argument("fit_fringe_values: k must be 1 or 2");
    detail::check_fringe_preconditions(x, model == FitModel::cosine_squared ? 1 : k);
    const auto w = detail::weights_from_sigma(sigma);

    double lo = y[0], hi = y[0];
    for (double v : y) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double freq = 2.0 * k;  // in x = theta
    std::vector<double> p0 = {std::max(hi - lo, 1e-12), lo,
                              model == FitModel::cosine_squared
                                  ? 2.0 * x[detail::argmin(y)]
                                  : freq * x[detail::argmin(y)]};

    detail::ModelFn f;
    detail::GradFn g;
    if (model == FitModel::cosine_k) {
        f = [freq](double xi, const std::vector<double>& p) {
            return p[0] * (1.0 - std::cos(freq * xi - p[2])) / 2.0 + p[1];
        };
        g = [freq](double xi, const std::vector<double>& p, std::vector<double>& out) {
            const double u = freq * xi - p[2];
            out[0] = (1.0 - std::cos(u)) / 2.0;
            out[1] = 1.0;
            out[2] = -p[0] * std::sin(u) / 2.0;
        };
    } else {
        f = [](double xi, const std::vector<double>& p) {
            const double q = 1.0 - std::cos(2.0 * xi - p[2]);
            return p[0] * q * q / 4.0 + p[1];
        };
        g = [](double xi, const std::vector<double>& p, std::vector<double>& out) {
            const double u = 2.0 * xi - p[2];
            const double q = 1.0 - std::cos(u);
            out[0] = q * q / 4.0;
            out[1] = 1.0;
            out[2] = -p[0] * q * std::sin(u) / 2.0;
        };
    }

    auto lm = detail::levenberg(x, y, w, p0, f, g);
    if (!lm.converged) throw std::runtime_error("fit_fringe: no convergence within 200 iterations");

    FitResult fit;
    fit.model = model;
    fit.amplitude = lm.params[0];
    fit.offset = lm.params[1];
    fit.phase_origin = lm.params[2];
    fit.width_or_frequency = model == FitModel::cosine_squared ? 2.0 : freq;
    fit.amplitude_err = lm.errors[0];
    fit.offset_err = lm.errors[1];
    fit.phase_err = lm.errors[2];
    fit.iterations = lm.iterations;
    fit.residual_rms = detail::unweighted_rms(x, y, fit);
    detail::finish_visibility_cosine(fit);
    return fit;
}

// Gaussian dip fit C (1 - V exp(-x^2 / tau^2)). Requires points on both
// wings of the dip.
inline FitResult fit_gaussian_dip_values(const std::vector<double>& x, const std::vector<double>& y,
                                         const std::vector<double>& sigma) {
    if (x.size() < 8) throw std::invalid_argument("fit_gaussian_dip: need at least 8 points");
    double xlo = x[0], xhi = x[0];
    for (double v : x) {
        xlo = std::min(xlo, v);
        xhi = std::max(xhi, v);
    }
    if (!(xlo < 0.0 && xhi > 0.0))
        throw std::invalid_argument("fit_gaussian_dip: scan must include both wings");
    const auto w = detail::weights_from_sigma(sigma);

    double ylo = y[0], yhi = y[0];
    for (double v : y) {
        ylo = std::min(ylo, v);
        yhi = std::max(yhi, v);
    }
    const double c0 = std::max(yhi, 1e-12);
    const double v0 = std::min(std::max(1.0 - ylo / c0, 1e-3), 1.0);
    // Width from the half-depth crossing (exp(-x^2/tau^2) = 1/2 at
    // |x| = tau sqrt(ln 2)), falling back to a quarter of the span.
    const double half_level = c0 * (1.0 - 0.5 * v0);
    double half_x = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (y[i] < half_level) half_x = std::max(half_x, std::abs(x[i]));
    double tau0 = half_x > 0.0 ? half_x / std::sqrt(std::log(2.0)) : 0.25 * (xhi - xlo);

    std::vector<double> p0 = {c0, v0, tau0};
    detail::ModelFn f = [](double xi, const std::vector<double>& p) {
        const double e = std::exp(-xi * xi / (p[2] * p[2]));
        return p[0] * (1.0 - p[1] * e);
    };
    detail::GradFn g = [](double xi, const std::vector<double>& p, std::vector<double>& out) {
        const double e = std::exp(-xi * xi / (p[2] * p[2]));
        out[0] = 1.0 - p[1] * e;
        out[1] = -p[0] * e;
        out[2] = -p[0] * p[1] * e * 2.0 * xi * xi / (p[2] * p[2] * p[2]);
    };

    auto lm = detail::levenberg(x, y, w, p0, f, g);
    if (!lm.converged)
        throw std::runtime_error("fit_gaussian_dip: no convergence within 200 iterations");

    FitResult fit;
    fit.model = FitModel::gaussian_dip;
    fit.offset = lm.params[0];
    fit.amplitude = lm.params[1];
    fit.width_or_frequency = std::abs(lm.params[2]);
    fit.offset_err = lm.errors[0];
    fit.amplitude_err = lm.errors[1];
    fit.width_err = lm.errors[2];
    fit.iterations = lm.iterations;
    fit.residual_rms = detail::unweighted_rms(x, y, fit);
    fit.visibility = fit.amplitude;  // V0 is the dip parameter itself
    fit.visibility_err = fit.amplitude_err;
    if (fit.visibility < -0.05 || fit.visibility > 1.05)
        throw std::runtime_error("fit visibility outside [-0.05, 1.05]");
    return fit;
}

namespace detail {

inline void scan_to_values(const FringeScan& scan, bool on_expected, std::vector<double>& x,
                           std::vector<double>& y, std::vector<double>& sigma) {
    x.clear();
    y.clear();
    sigma.clear();
    for (const auto& p : scan.points) {
        x.push_back(p.setting);
        if (on_expected) {
            y.push_back(p.expected_rate);
            sigma.push_back(1.0);  // uniform weights on the noiseless curve
        } else {
            y.push_back(static_cast<double>(p.counts));
            sigma.push_back(p.stderr_counts);
        }
    }
}

}  // namespace detail

inline FitResult fit_fringe(const FringeScan& scan, int k, FitModel model, bool on_expected = false) {
    std::vector<double> x, y, s;
    detail::scan_to_values(scan, on_expected, x, y, s);
    return fit_fringe_values(x, y, s, k, model);
}

inline FitResult fit_gaussian_dip(const FringeScan& scan, bool on_expected = false) {
    std::vector<double> x, y, s;
    detail::scan_to_values(scan, on_expected, x, y, s);
    return fit_gaussian_dip_values(x, y, s);
}

// Free-frequency cosine fit A (1 - cos(w x - phi))/2 + B: coarse grid over
// (w, phi) with linear (A, B) solves, then a 4-parameter polish. Returns the
// fitted angular frequency w, used for the NOON/single super-resolution
// ratio.
inline double estimate_frequency(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 8) throw std::invalid_argument("estimate_frequency: need at least 8 points");
    double best_sse = std::numeric_limits<double>::infinity();
    double best_w = 2.0, best_phi = 0.0, best_a = 1.0, best_b = 0.0;
    for (double wfreq = 0.5; wfreq <= 10.0; wfreq += 0.05) {
        for (int ip = 0; ip < 32; ++ip) {
            const double phi = 2.0 * detail::kPiFit * ip / 32.0;
            double sgg = 0.0, sg = 0.0, sgy = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double gi = (1.0 - std::cos(wfreq * x[i] - phi)) / 2.0;
                sgg += gi * gi;
                sg += gi;
                sgy += gi * y[i];
                sy += y[i];
            }
            const double n = static_cast<double>(x.size());
            const double det = sgg * n - sg * sg;
            if (std::abs(det) < 1e-12) continue;
            const double a = (sgy * n - sg * sy) / det;
            const double b = (sgg * sy - sg * sgy) / det;
            double sse = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double gi = (1.0 - std::cos(wfreq * x[i] - phi)) / 2.0;
                const double r = y[i] - a * gi - b;
                sse += r * r;
            }
            if (sse < best_sse) {
                best_sse = sse;
                best_w = wfreq;
                best_phi = phi;
                best_a = a;
                best_b = b;
            }
        }
    }
    std::vector<double> w(x.size(), 1.0);
    std::vector<double> p0 = {best_a, best_b, best_phi, best_w};
    detail::ModelFn f = [](double xi, const std::vector<double>& p) {
        return p[0] * (1.0 - std::cos(p[3] * xi - p[2])) / 2.0 + p[1];
    };
    detail::GradFn g = [](double xi, const std::vector<double>& p, std::vector<double>& out) {
        const double u = p[3] * xi - p[2];
        out[0] = (1.0 - std::cos(u)) / 2.0;
        out[1] = 1.0;
        out[2] = -p[0] * std::sin(u) / 2.0;
        out[3] = p[0] * std::sin(u) * xi / 2.0;
    };
    auto lm = detail::levenberg(x, y, w, p0, f, g);
    return std::abs(lm.params[3]);
}

inline double estimate_frequency(const FringeScan& scan, bool on_expected = true) {
    std::vector<double> x, y, s;
    detail::scan_to_values(scan, on_expected, x, y, s);
    return estimate_frequency(x, y);
}

}  // namespace noonsim
