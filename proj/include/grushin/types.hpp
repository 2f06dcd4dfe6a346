#pragma once

#include <array>
#include <cmath>
#include <span>

#include "grushin/errors.hpp"

namespace grushin {

/// Hard cap on the ambient dimension m + n; keeps Point and Jet allocation
/// free on hot quadrature paths.
inline constexpr int kMaxDim = 12;

/// Ambient geometry: dimensions of the two blocks and the degeneracy
/// exponent. The homogeneous dimension and the capability flags are always
/// recomputed from (m, n, alpha), never stored.
struct SpaceParams {
    int m = 5;
    int n = 1;
    double alpha = 1.0;

    SpaceParams(int m_, int n_, double alpha_) : m(m_), n(n_), alpha(alpha_) {
        if (m < 1 || n < 1)
            throw InputError("SpaceParams: need m >= 1 and n >= 1");
        if (m + n > kMaxDim)
            throw InputError("SpaceParams: m + n exceeds supported dimension");
        if (!(alpha > 0.0) || alpha > 1.0)
            throw InputError("SpaceParams: alpha must lie in (0, 1]");
    }

    int dim() const { return m + n; }
    double Q() const { return m + (alpha + 1.0) * n; }

    bool hardy_ok() const { return m > 2; }
    bool rellich_ok() const { return Q() > 6.0; }
    bool suc_ok() const { return m > 4 && Q() > 6.0; }
};

/// A point (x, y) with x in R^m stored first, y in R^n after it.
struct Point {
    std::array<double, kMaxDim> c{};
    int m = 0;
    int n = 0;

    Point() = default;
    Point(const SpaceParams& sp) : m(sp.m), n(sp.n) {}

    int dim() const { return m + n; }
    double x(int i) const { return c[i]; }
    double y(int j) const { return c[m + j]; }
    double& x(int i) { return c[i]; }
    double& y(int j) { return c[m + j]; }

    double x_norm2() const {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += c[i] * c[i];
        return s;
    }
    double y_norm2() const {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += c[m + j] * c[m + j];
        return s;
    }

    /// The representative of the bi-radial orbit (s, t):
    /// x = s e_1, y = t e_1.
    static Point representative(double s, double t, const SpaceParams& sp) {
        Point p(sp);
        p.x(0) = s;
        p.y(0) = t;
        return p;
    }
};

/// Euclidean derivative data of a scalar field at a point: value, gradient,
/// symmetric Hessian, and (optionally) the third-order contractions needed
/// to differentiate the sub-Laplacian once:
///   glx[k] = d_k (Laplacian_x f),  gly[k] = d_k (Laplacian_y f).
struct Jet {
    double value = 0.0;
    int dim = 0;
    bool has_hess = false;
    bool has_third = false;
    std::array<double, kMaxDim> grad{};
    std::array<double, kMaxDim * kMaxDim> hess{};
    std::array<double, kMaxDim> glx{};
    std::array<double, kMaxDim> gly{};

    double h(int i, int j) const { return hess[i * kMaxDim + j]; }
    double& h(int i, int j) { return hess[i * kMaxDim + j]; }

    double trace_x(int m) const {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += h(i, i);
        return s;
    }
    double trace_y(int m, int n) const {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += h(m + j, m + j);
        return s;
    }
};

} // namespace grushin
