#pragma once

// Small dense 2x2 complex matrix used for mode transformations and
// Jones-calculus polarization optics.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace noonsim {

using cxd = std::complex<double>;

struct Mat2 {
    // Row-major entries: m[r][c].
    std::array<std::array<cxd, 2>, 2> m{};

    static Mat2 identity() {
        Mat2 u;
        u.m[0][0] = 1.0;
        u.m[1][1] = 1.0;
        return u;
    }

    cxd operator()(int r, int c) const { return m[r][c]; }
    cxd& operator()(int r, int c) { return m[r][c]; }

    Mat2 adjoint() const {
        Mat2 a;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                a.m[r][c] = std::conj(m[c][r]);
        return a;
    }

    cxd determinant() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

    friend Mat2 operator*(const Mat2& a, const Mat2& b) {
        Mat2 p;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                p.m[r][c] = a.m[r][0] * b.m[0][c] + a.m[r][1] * b.m[1][c];
        return p;
    }

    friend std::array<cxd, 2> operator*(const Mat2& a, const std::array<cxd, 2>& v) {
        return {a.m[0][0] * v[0] + a.m[0][1] * v[1], a.m[1][0] * v[0] + a.m[1][1] * v[1]};
    }

    // Max-abs deviation of u * u^dagger from the identity.
    double unitarity_defect() const {
        Mat2 p = (*this) * adjoint();
        double d = 0.0;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                cxd want = (r == c) ? cxd(1.0) : cxd(0.0);
                d = std::max(d, std::abs(p.m[r][c] - want));
            }
        return d;
    }

    bool is_unitary(double tol = 1e-10) const { return unitarity_defect() < tol; }
};

inline void require_unitary(const Mat2& u, const char* what, double tol = 1e-10) {
    if (!u.is_unitary(tol))
        throw std::invalid_argument(std::string(what) + ": matrix is not unitary within tolerance");
}

}  // namespace noonsim
