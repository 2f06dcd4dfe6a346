#pragma once

#include <cmath>
#include <limits>

namespace grushin {

/// Truncated bivariate Taylor coefficients: value and all partial
/// derivatives up to total order 3 in the variables (a, b). Arithmetic on
/// these propagates derivatives exactly, so every bi-radial catalog field
/// gets machine-precision jets from one scalar expression.
struct Taylor3 {
    double f = 0, fa = 0, fb = 0;
    double faa = 0, fab = 0, fbb = 0;
    double faaa = 0, faab = 0, fabb = 0, fbbb = 0;

    static Taylor3 constant(double c) {
        Taylor3 t;
        t.f = c;
        return t;
    }
    static Taylor3 var_a(double a0) {
        Taylor3 t;
        t.f = a0;
        t.fa = 1.0;
        return t;
    }
    static Taylor3 var_b(double b0) {
        Taylor3 t;
        t.f = b0;
        t.fb = 1.0;
        return t;
    }

    Taylor3 operator-() const {
        Taylor3 r = *this;
        r.f = -r.f; r.fa = -r.fa; r.fb = -r.fb;
        r.faa = -r.faa; r.fab = -r.fab; r.fbb = -r.fbb;
        r.faaa = -r.faaa; r.faab = -r.faab; r.fabb = -r.fabb; r.fbbb = -r.fbbb;
        return r;
    }

    friend Taylor3 operator+(const Taylor3& x, const Taylor3& y) {
        Taylor3 r;
        r.f = x.f + y.f; r.fa = x.fa + y.fa; r.fb = x.fb + y.fb;
        r.faa = x.faa + y.faa; r.fab = x.fab + y.fab; r.fbb = x.fbb + y.fbb;
        r.faaa = x.faaa + y.faaa; r.faab = x.faab + y.faab;
        r.fabb = x.fabb + y.fabb; r.fbbb = x.fbbb + y.fbbb;
        return r;
    }
    friend Taylor3 operator-(const Taylor3& x, const Taylor3& y) { return x + (-y); }
    friend Taylor3 operator+(const Taylor3& x, double c) {
        Taylor3 r = x;
        r.f += c;
        return r;
    }
    friend Taylor3 operator+(double c, const Taylor3& x) { return x + c; }
    friend Taylor3 operator-(const Taylor3& x, double c) { return x + (-c); }
    friend Taylor3 operator-(double c, const Taylor3& x) { return (-x) + c; }
    friend Taylor3 operator*(const Taylor3& x, double c) {
        Taylor3 r;
        r.f = x.f * c; r.fa = x.fa * c; r.fb = x.fb * c;
        r.faa = x.faa * c; r.fab = x.fab * c; r.fbb = x.fbb * c;
        r.faaa = x.faaa * c; r.faab = x.faab * c; r.fabb = x.fabb * c; r.fbbb = x.fbbb * c;
        return r;
    }
    friend Taylor3 operator*(double c, const Taylor3& x) { return x * c; }

    /// Leibniz rule to order 3.
    friend Taylor3 operator*(const Taylor3& x, const Taylor3& y) {
        Taylor3 r;
        r.f = x.f * y.f;
        r.fa = x.fa * y.f + x.f * y.fa;
        r.fb = x.fb * y.f + x.f * y.fb;
        r.faa = x.faa * y.f + 2 * x.fa * y.fa + x.f * y.faa;
        r.fab = x.fab * y.f + x.fa * y.fb + x.fb * y.fa + x.f * y.fab;
        r.fbb = x.fbb * y.f + 2 * x.fb * y.fb + x.f * y.fbb;
        r.faaa = x.faaa * y.f + 3 * x.faa * y.fa + 3 * x.fa * y.faa + x.f * y.faaa;
        r.faab = x.faab * y.f + x.faa * y.fb + 2 * x.fab * y.fa + 2 * x.fa * y.fab +
                 x.fb * y.faa + x.f * y.faab;
        r.fabb = x.fabb * y.f + x.fbb * y.fa + 2 * x.fab * y.fb + 2 * x.fb * y.fab +
                 x.fa * y.fbb + x.f * y.fabb;
        r.fbbb = x.fbbb * y.f + 3 * x.fbb * y.fb + 3 * x.fb * y.fbb + x.f * y.fbbb;
        return r;
    }

    /// Composition with a univariate g given g(f), g'(f), g''(f), g'''(f).
    Taylor3 compose(double g0, double g1, double g2, double g3) const {
        Taylor3 r;
        r.f = g0;
        r.fa = g1 * fa;
        r.fb = g1 * fb;
        r.faa = g2 * fa * fa + g1 * faa;
        r.fab = g2 * fa * fb + g1 * fab;
        r.fbb = g2 * fb * fb + g1 * fbb;
        r.faaa = g3 * fa * fa * fa + 3 * g2 * fa * faa + g1 * faaa;
        r.faab = g3 * fa * fa * fb + g2 * (faa * fb + 2 * fa * fab) + g1 * faab;
        r.fabb = g3 * fa * fb * fb + g2 * (fbb * fa + 2 * fb * fab) + g1 * fabb;
        r.fbbb = g3 * fb * fb * fb + 3 * g2 * fb * fbb + g1 * fbbb;
        return r;
    }

    /// General power f^e (f > 0 required unless e is a non-negative integer
    /// small enough for the derivative factors to vanish first).
    Taylor3 pow(double e) const {
        const double v = f;
        double g0, g1, g2, g3;
        if (e == 0.0) return constant(1.0);
        if (v == 0.0) {
            // Powers of an exact zero: derivative factors that would hit a
            // negative power are NaN unless the power-rule prefactor kills
            // them first; callers keep singular families off the axes.
            const double nan = std::numeric_limits<double>::quiet_NaN();
            g0 = 0.0;
            g1 = (e == 1.0) ? 1.0 : (e > 1.0 ? 0.0 : nan);
            g2 = (e == 2.0) ? 2.0 : (e > 2.0 || e == 1.0 ? 0.0 : nan);
            g3 = (e == 3.0) ? 6.0 : (e > 3.0 || e == 1.0 || e == 2.0 ? 0.0 : nan);
        } else {
            g0 = std::pow(v, e);
            g1 = e * g0 / v;
            g2 = (e - 1.0) * g1 / v;
            g3 = (e - 2.0) * g2 / v;
        }
        return compose(g0, g1, g2, g3);
    }

    friend Taylor3 operator/(const Taylor3& x, const Taylor3& y) {
        return x * y.pow(-1.0);
    }
    friend Taylor3 operator/(const Taylor3& x, double c) { return x * (1.0 / c); }

    /// (max(0, f))^3: the clamped cube used by compact bumps; C^2 across
    /// the support edge.
    Taylor3 clamped_cube() const {
        if (f <= 0.0) return Taylor3{};
        return compose(f * f * f, 3 * f * f, 6 * f, 6.0);
    }
};

} // namespace grushin
