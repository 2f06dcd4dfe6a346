#include "grushin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "grushin/fields.hpp"

namespace grushin {

double gauge(const Point& p, const SpaceParams& sp) {
    const double a = sp.alpha;
    const double s2 = p.x_norm2();
    const double b = p.y_norm2();
    if (b == 0.0) return std::sqrt(s2);
    if (s2 == 0.0) return std::pow((a + 1.0) * std::sqrt(b), 1.0 / (a + 1.0));
    const double G = std::pow(s2, a + 1.0) + (a + 1.0) * (a + 1.0) * b;
    return std::pow(G, 0.5 / (a + 1.0));
}

double psi(const Point& p, const SpaceParams& sp) {
    const double s2 = p.x_norm2();
    const double b = p.y_norm2();
    if (s2 == 0.0 && b == 0.0)
        throw DegeneratePoint("psi: undefined at the gauge origin");
    if (b == 0.0) return 1.0;
    if (s2 == 0.0) return 0.0;
    const double rho = gauge(p, sp);
    return std::pow(s2 / (rho * rho), sp.alpha);
}

Point dilate(const Point& p, double lambda, const SpaceParams& sp) {
    if (!(lambda > 0.0)) throw InputError("dilate: lambda must be positive");
    Point q(sp);
    const double ly = std::pow(lambda, sp.alpha + 1.0);
    for (int i = 0; i < sp.m; ++i) q.x(i) = lambda * p.x(i);
    for (int j = 0; j < sp.n; ++j) q.y(j) = ly * p.y(j);
    return q;
}

double gauge_grad_norm(const Point& p, const SpaceParams& sp) {
    // |grad rho|^2 = rho^{-2(2a+1)} (|x|^{4a} |x|^2 + (a+1)^2 |y|^2)
    const double a = sp.alpha;
    const double s2 = p.x_norm2();
    const double b = p.y_norm2();
    const double rho = gauge(p, sp);
    if (rho == 0.0) throw DegeneratePoint("gauge_grad_norm: origin");
    const double num = std::pow(s2, 2.0 * a) * s2 + (a + 1.0) * (a + 1.0) * b;
    return std::sqrt(num) / std::pow(rho, 2.0 * a + 1.0);
}

Jet gauge_jet(const Point& p, const SpaceParams& sp) {
    const double a = sp.alpha;
    const int m = sp.m, n = sp.n, d = sp.dim();
    const double s2 = p.x_norm2();
    const double rho = gauge(p, sp);
    if (rho == 0.0) throw DegeneratePoint("gauge_jet: origin");

    Jet j;
    j.dim = d;
    j.value = rho;
    j.has_hess = true;

    const double u = std::pow(s2, a);                    // |x|^{2a}
    const double du = (s2 > 0.0) ? 2.0 * a * std::pow(s2, a - 1.0)
                                 : 0.0;                  // d(|x|^{2a})/d(x_j) / x_j
    const double rm = std::pow(rho, -(2.0 * a + 1.0));
    const double rm2 = (2.0 * a + 1.0) * std::pow(rho, -(4.0 * a + 3.0));

    for (int i = 0; i < m; ++i) j.grad[i] = u * p.x(i) * rm;
    for (int k = 0; k < n; ++k) j.grad[m + k] = (a + 1.0) * p.y(k) * rm;

    for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k) {
            double v = du * p.x(i) * p.x(k) * rm;
            if (i == k) v += u * rm;
            v -= rm2 * u * u * p.x(i) * p.x(k);
            j.h(i, k) = v;
        }
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < n; ++k) {
            const double v = -rm2 * u * p.x(i) * (a + 1.0) * p.y(k);
            j.h(i, m + k) = v;
            j.h(m + k, i) = v;
        }
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double v = -rm2 * (a + 1.0) * (a + 1.0) * p.y(i) * p.y(k);
            if (i == k) v += (a + 1.0) * rm;
            j.h(m + i, m + k) = v;
        }
    return j;
}

void horizontal_gradient(const Jet& j, const Point& p, const SpaceParams& sp,
                         std::array<double, kMaxDim>& out) {
    const double sa = std::pow(p.x_norm2(), 0.5 * sp.alpha);
    for (int i = 0; i < sp.m; ++i) out[i] = j.grad[i];
    for (int k = 0; k < sp.n; ++k) out[sp.m + k] = sa * j.grad[sp.m + k];
}

double horizontal_gradient_norm2(const Jet& j, const Point& p, const SpaceParams& sp) {
    const double s2a = std::pow(p.x_norm2(), sp.alpha);
    double gx = 0.0, gy = 0.0;
    for (int i = 0; i < sp.m; ++i) gx += j.grad[i] * j.grad[i];
    for (int k = 0; k < sp.n; ++k) gy += j.grad[sp.m + k] * j.grad[sp.m + k];
    return gx + s2a * gy;
}

double laplace_x(const Jet& j, const Point& p, const SpaceParams& sp) {
    const double s2a = std::pow(p.x_norm2(), sp.alpha);
    return j.trace_x(sp.m) + s2a * j.trace_y(sp.m, sp.n);
}

double z_derivative(const Jet& j, const Point& p, const SpaceParams& sp) {
    double z = 0.0;
    for (int i = 0; i < sp.m; ++i) z += p.x(i) * j.grad[i];
    for (int k = 0; k < sp.n; ++k) z += (sp.alpha + 1.0) * p.y(k) * j.grad[sp.m + k];
    return z;
}

void euclidean_grad_laplace_x(const Jet& j, const Point& p, const SpaceParams& sp,
                              std::array<double, kMaxDim>& out) {
    if (!j.has_third)
        throw InputError("grad_laplace_x: jet lacks third-order data");
    const double a = sp.alpha;
    const double s2 = p.x_norm2();
    const double s2a = std::pow(s2, a);
    const double s2am1 = (s2 > 0.0) ? std::pow(s2, a - 1.0) : 0.0;
    const double lap_y = j.trace_y(sp.m, sp.n);

    // d_k (Delta_X f) = glx_k + |x|^{2a} gly_k + [k < m] 2a |x|^{2a-2} x_k Lap_y f
    for (int i = 0; i < sp.m; ++i)
        out[i] = j.glx[i] + s2a * j.gly[i] + 2.0 * a * s2am1 * p.x(i) * lap_y;
    for (int k = 0; k < sp.n; ++k)
        out[sp.m + k] = j.glx[sp.m + k] + s2a * j.gly[sp.m + k];
}

void grad_laplace_x(const Jet& j, const Point& p, const SpaceParams& sp,
                    std::array<double, kMaxDim>& out) {
    euclidean_grad_laplace_x(j, p, sp, out);
    const double sa = std::pow(p.x_norm2(), 0.5 * sp.alpha);
    for (int k = 0; k < sp.n; ++k) out[sp.m + k] *= sa;
}

double grad_laplace_x_norm2(const Jet& j, const Point& p, const SpaceParams& sp) {
    std::array<double, kMaxDim> g{};
    grad_laplace_x(j, p, sp, g);
    double r = 0.0;
    for (int i = 0; i < sp.dim(); ++i) r += g[i] * g[i];
    return r;
}

double xx_second(const Jet& j, const Point& p, const SpaceParams& sp, int i, int k) {
    const int m = sp.m;
    const double a = sp.alpha;
    const double s2 = p.x_norm2();
    const double sa = std::pow(s2, 0.5 * a);
    if (i < m && k < m) return j.h(i, k);
    if (i >= m && k >= m) return std::pow(s2, a) * j.h(i, k);
    if (i < m) {
        // d_{x_i} (|x|^a d_{y_k} f)
        const double dsa = (s2 > 0.0) ? a * std::pow(s2, 0.5 * a - 1.0) * p.x(i) : 0.0;
        return dsa * j.grad[k] + sa * j.h(i, k);
    }
    return sa * j.h(i, k);
}

namespace {

double fd_step(double coord) {
    static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
    return h0 * std::max(1.0, std::abs(coord));
}

} // namespace

Jet fd_jet(const std::function<double(const Point&)>& f, const Point& p,
           const SpaceParams& sp, int order) {
    const int d = sp.dim();
    Jet j;
    j.dim = d;
    j.value = f(p);
    if (order < 1) return j;

    for (int i = 0; i < d; ++i) {
        const double h = fd_step(p.c[i]);
        Point pp = p, pm = p;
        pp.c[i] += h;
        pm.c[i] -= h;
        j.grad[i] = (f(pp) - f(pm)) / (2.0 * h);
    }
    if (order < 2) return j;

    j.has_hess = true;
    const double hq = std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));
    for (int i = 0; i < d; ++i) {
        const double hi = hq * std::max(1.0, std::abs(p.c[i]));
        Point pp = p, pm = p;
        pp.c[i] += hi;
        pm.c[i] -= hi;
        j.h(i, i) = (f(pp) - 2.0 * j.value + f(pm)) / (hi * hi);
        for (int k = i + 1; k < d; ++k) {
            const double hk = hq * std::max(1.0, std::abs(p.c[k]));
            Point a = p, b = p, c = p, e = p;
            a.c[i] += hi; a.c[k] += hk;
            b.c[i] += hi; b.c[k] -= hk;
            c.c[i] -= hi; c.c[k] += hk;
            e.c[i] -= hi; e.c[k] -= hk;
            const double v = (f(a) - f(b) - f(c) + f(e)) / (4.0 * hi * hk);
            j.h(i, k) = v;
            j.h(k, i) = v;
        }
    }
    if (order < 3) return j;

    j.has_third = true;
    const double h5 = std::pow(std::numeric_limits<double>::epsilon(), 0.2);
    auto lap_block = [&](const Point& q, int lo, int hi_excl) {
        double s = 0.0;
        const double fq = f(q);
        for (int i = lo; i < hi_excl; ++i) {
            const double h = h5 * std::max(1.0, std::abs(q.c[i]));
            Point qp = q, qm = q;
            qp.c[i] += h;
            qm.c[i] -= h;
            s += (f(qp) - 2.0 * fq + f(qm)) / (h * h);
        }
        return s;
    };
    for (int k = 0; k < d; ++k) {
        const double h = h5 * std::max(1.0, std::abs(p.c[k]));
        Point pp = p, pm = p;
        pp.c[k] += h;
        pm.c[k] -= h;
        j.glx[k] = (lap_block(pp, 0, sp.m) - lap_block(pm, 0, sp.m)) / (2.0 * h);
        j.gly[k] = (lap_block(pp, sp.m, d) - lap_block(pm, sp.m, d)) / (2.0 * h);
    }
    return j;
}

double IdentityResiduals::max() const {
    return std::max({lap_rho, z_rho, mixed_grad, grad_norm, commutator, z_bound});
}

namespace {

// X_i applied to a scalar functional g by central differences; for the
// fields of the second block the |x|^a factor is evaluated at p itself.
double apply_xi_fd(const std::function<double(const Point&)>& g, const Point& p,
                   const SpaceParams& sp, int i) {
    const int coord = i;
    const double h = fd_step(p.c[coord]);
    Point pp = p, pm = p;
    pp.c[coord] += h;
    pm.c[coord] -= h;
    double v = (g(pp) - g(pm)) / (2.0 * h);
    if (i >= sp.m) v *= std::pow(p.x_norm2(), 0.5 * sp.alpha);
    return v;
}

double apply_z_fd(const std::function<double(const Point&)>& g, const Point& p,
                  const SpaceParams& sp) {
    double z = 0.0;
    for (int i = 0; i < sp.dim(); ++i) {
        if (p.c[i] == 0.0) continue;
        const double h = fd_step(p.c[i]);
        Point pp = p, pm = p;
        pp.c[i] += h;
        pm.c[i] -= h;
        const double di = (g(pp) - g(pm)) / (2.0 * h);
        z += (i < sp.m ? 1.0 : sp.alpha + 1.0) * p.c[i] * di;
    }
    return z;
}

} // namespace

double commutator_residual(const Point& p, const SpaceParams& sp,
                           const AnalyticField& test, bool expect_xi) {
    auto z_of = [&](const Point& q) {
        const Jet jq = test.jet(q, 1);
        return z_derivative(jq, q, sp);
    };
    double worst = 0.0;
    const Jet jp = test.jet(p, 1);
    std::array<double, kMaxDim> hg{};
    horizontal_gradient(jp, p, sp, hg);
    const double zf = z_derivative(jp, p, sp);
    for (int i = 0; i < sp.dim(); ++i) {
        auto xi_of = [&](const Point& q) {
            const Jet jq = test.jet(q, 1);
            double v = jq.grad[i];
            if (i >= sp.m) v *= std::pow(q.x_norm2(), 0.5 * sp.alpha);
            return v;
        };
        const double xi_z = apply_xi_fd(z_of, p, sp, i);
        const double z_xi = apply_z_fd(xi_of, p, sp);
        const double expected = expect_xi ? hg[i] : zf;
        worst = std::max(worst, std::abs((xi_z - z_xi) - expected));
    }
    return worst;
}

IdentityResiduals identity_residuals(const Point& p, const SpaceParams& sp,
                                     const AnalyticField& test) {
    const double rho = gauge(p, sp);
    if (rho == 0.0) throw DegeneratePoint("identity_residuals: origin");
    const double ps = psi(p, sp);
    const double Q = sp.Q();

    IdentityResiduals r;

    const Jet jr = gauge_jet(p, sp);
    r.lap_rho = std::abs(laplace_x(jr, p, sp) - (Q - 1.0) * ps / rho);
    r.z_rho = std::abs(z_derivative(jr, p, sp) - rho);
    r.grad_norm = std::abs(horizontal_gradient_norm2(jr, p, sp) - ps);

    const Jet jt = test.jet(p, 1);
    std::array<double, kMaxDim> gt{}, gr{};
    horizontal_gradient(jt, p, sp, gt);
    horizontal_gradient(jr, p, sp, gr);
    double dot = 0.0;
    for (int i = 0; i < sp.dim(); ++i) dot += gt[i] * gr[i];
    r.mixed_grad = std::abs(dot - z_derivative(jt, p, sp) * ps / rho);

    r.commutator = commutator_residual(p, sp, test, /*expect_xi=*/true);

    if (ps >= 1e-10) {
        const double zf = std::abs(z_derivative(jt, p, sp));
        const double bound = rho / std::sqrt(ps) *
                             std::sqrt(horizontal_gradient_norm2(jt, p, sp));
        r.z_bound = std::max(0.0, zf - bound);
    }
    return r;
}

} // namespace grushin
