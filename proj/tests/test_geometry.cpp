#include "doctest.h"

#include <cmath>

#include "grushin/geometry.hpp"
#include "grushin/fields.hpp"
#include "support.hpp"

using namespace grushin;
using testsup::random_point;
using testsup::rel_err;

namespace {

Point make_point(const SpaceParams& sp, std::initializer_list<double> xs,
                 std::initializer_list<double> ys) {
    Point p(sp);
    int i = 0;
    for (double v : xs) p.c[i++] = v;
    i = sp.m;
    for (double v : ys) p.c[i++] = v;
    return p;
}

} // namespace

TEST_CASE("gauge: closed-form values and homogeneity") {
    SpaceParams sp(5, 1, 1.0);
    CHECK(gauge(make_point(sp, {1, 0, 0, 0, 0}, {0}), sp) == doctest::Approx(1.0));
    // (4*1)^{1/4} = sqrt(2)
    CHECK(gauge(make_point(sp, {0, 0, 0, 0, 0}, {1}), sp) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

    std::mt19937_64 rng(7);
    for (double alpha : {1.0, 0.5}) {
        SpaceParams spa(5, 1, alpha);
        for (int k = 0; k < 50; ++k) {
            const Point p = random_point(rng, spa);
            const double g = gauge(p, spa);
            for (double lam : {0.1, 0.37, 1.0, 3.0, 10.0}) {
                const double gd = gauge(dilate(p, lam, spa), spa);
                CHECK(std::abs(gd - lam * g) <= 1e-12 * lam * g);
            }
        }
    }
}

TEST_CASE("psi: block values, range, degeneracy") {
    SpaceParams sp(5, 1, 1.0);
    CHECK(psi(make_point(sp, {0.3, -0.2, 0, 0, 0}, {0}), sp) == 1.0);  // exact
    CHECK(psi(make_point(sp, {0, 0, 0, 0, 0}, {0.7}), sp) == 0.0);
    // rho^4 = 1 + 4 = 5, psi = |x|^2/rho^2 = 1/sqrt(5)
    CHECK(psi(make_point(sp, {1, 0, 0, 0, 0}, {1}), sp) ==
          doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-14));
    CHECK_THROWS_AS(psi(make_point(sp, {0, 0, 0, 0, 0}, {0}), sp), DegeneratePoint);

    std::mt19937_64 rng(11);
    SpaceParams spa(3, 2, 0.5);
    for (int k = 0; k < 200; ++k) {
        const double v = psi(random_point(rng, spa), spa);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("dilate: examples") {
    SpaceParams sp(5, 1, 1.0);
    const Point p = make_point(sp, {1, 0, 0, 0, 0}, {1});
    const Point q = dilate(p, 2.0, sp);
    CHECK(q.x(0) == doctest::Approx(2.0));
    CHECK(q.y(0) == doctest::Approx(4.0));
    const Point id = dilate(p, 1.0, sp);
    for (int i = 0; i < sp.dim(); ++i) CHECK(id.c[i] == doctest::Approx(p.c[i]));
    CHECK_THROWS_AS(dilate(p, 0.0, sp), InputError);
}

TEST_CASE("horizontal_gradient: coordinate jets and the gauge jet") {
    SpaceParams sp(5, 1, 1.0);
    const Point p = make_point(sp, {2, 0, 0, 0, 0}, {0.3});

    Jet jx;  // f = x_1
    jx.dim = sp.dim();
    jx.grad[0] = 1.0;
    std::array<double, kMaxDim> g{};
    horizontal_gradient(jx, p, sp, g);
    CHECK(g[0] == doctest::Approx(1.0));
    for (int i = 1; i < sp.dim(); ++i) CHECK(g[i] == doctest::Approx(0.0));

    Jet jy;  // f = y_1 at |x| = 2
    jy.dim = sp.dim();
    jy.grad[sp.m] = 1.0;
    horizontal_gradient(jy, p, sp, g);
    CHECK(g[sp.m] == doctest::Approx(2.0));

    // f = rho: |grad_X rho|^2 = psi
    std::mt19937_64 rng(3);
    for (double alpha : {1.0, 0.5}) {
        SpaceParams spa(5, 1, alpha);
        for (int k = 0; k < 100; ++k) {
            const Point q = random_point(rng, spa);
            const Jet jr = gauge_jet(q, spa);
            CHECK(rel_err(horizontal_gradient_norm2(jr, q, spa), psi(q, spa)) < 1e-12);
        }
    }
}

TEST_CASE("laplace_x: polynomial fields and the rho-power law") {
    std::mt19937_64 rng(5);
    for (double alpha : {1.0, 0.5}) {
        SpaceParams sp(5, 1, alpha);
        auto x2 = biradial_polynomial({{1.0, 1.0, 0.0}}, sp);  // |x|^2
        auto y2 = biradial_polynomial({{1.0, 0.0, 1.0}}, sp);  // |y|^2
        for (int k = 0; k < 20; ++k) {
            const Point p = random_point(rng, sp);
            CHECK(rel_err(laplace_x(x2->jet(p, 2), p, sp), 2.0 * sp.m) < 1e-13);
            const double want = 2.0 * sp.n * std::pow(p.x_norm2(), alpha);
            CHECK(rel_err(laplace_x(y2->jet(p, 2), p, sp), want) < 1e-13);
        }

        // rho^beta: finite differences of the closed-form value function are
        // the oracle for the power law beta (beta + Q - 2) rho^{beta-2} psi.
        for (double beta : {2.0 - sp.Q(), 2.0, 3.7}) {
            auto f = rho_power(beta, sp);
            auto value = [&](const Point& q) { return f->value(q); };
            for (int k = 0; k < 34; ++k) {
                const Point p = random_point(rng, sp, 0.2, 1.2);
                const Jet fd = fd_jet(value, p, sp, 2);
                const double via_fd = laplace_x(fd, p, sp);
                const double rho = gauge(p, sp);
                const double want = beta * (beta + sp.Q() - 2.0) *
                                    std::pow(rho, beta - 2.0) * psi(p, sp);
                const double scale = std::max(1.0, std::abs(via_fd));
                CHECK(std::abs(via_fd - want) / scale < 1e-5);
                // exact jets must match the closed form much tighter
                CHECK(rel_err(laplace_x(f->jet(p, 2), p, sp),
                              f->closed_laplacian(p)) < 1e-11);
            }
        }
    }
}

TEST_CASE("z_derivative: gauge identity, constants, Euler relation") {
    std::mt19937_64 rng(9);
    SpaceParams sp(5, 1, 0.5);
    auto c = constant_field(4.2, sp);
    for (int k = 0; k < 50; ++k) {
        const Point p = random_point(rng, sp);
        const Jet jr = gauge_jet(p, sp);
        CHECK(rel_err(z_derivative(jr, p, sp), gauge(p, sp)) < 1e-12);
        CHECK(z_derivative(c->jet(p, 1), p, sp) == 0.0);
    }

    // Euler: Z f = k f for delta_lambda-homogeneous f of degree k; the oracle
    // is a centered difference of f(dilate(p, lambda)) in lambda at 1.
    for (auto [field, deg] : {std::pair{rho_power(2.0, sp), 2.0},
                              std::pair{coordinate_field(0, sp), 1.0},
                              std::pair{rho_power(2.0 - sp.Q(), sp), 2.0 - sp.Q()}}) {
        for (int k = 0; k < 25; ++k) {
            const Point p = random_point(rng, sp, 0.2, 1.2);
            const double z = z_derivative(field->jet(p, 1), p, sp);
            CHECK(rel_err(z, deg * field->value(p)) < 1e-8);
            const double h = 1e-6;
            const double fd = (field->value(dilate(p, 1.0 + h, sp)) -
                               field->value(dilate(p, 1.0 - h, sp))) /
                              (2.0 * h);
            const double scale = std::max(1.0, std::abs(fd));
            CHECK(std::abs(z - fd) / scale < 1e-7);
        }
    }
}

TEST_CASE("gauge_jet agrees with finite differences of the closed form") {
    std::mt19937_64 rng(13);
    for (double alpha : {1.0, 0.5}) {
        SpaceParams sp(5, 1, alpha);
        auto value = [&](const Point& q) { return gauge(q, sp); };
        for (int k = 0; k < 40; ++k) {
            const Point p = random_point(rng, sp, 0.15, 1.2);
            const Jet a = gauge_jet(p, sp);
            const Jet fd = fd_jet(value, p, sp, 2);
            for (int i = 0; i < sp.dim(); ++i)
                CHECK(std::abs(a.grad[i] - fd.grad[i]) < 1e-8);
            for (int i = 0; i < sp.dim(); ++i)
                for (int j = 0; j < sp.dim(); ++j)
                    CHECK(std::abs(a.h(i, j) - fd.h(i, j)) < 1e-5);
        }
    }
}

TEST_CASE("identity_residuals: all six small on random points") {
    std::mt19937_64 rng(17);
    for (double alpha : {1.0, 0.5}) {
        SpaceParams sp(5, 1, alpha);
        auto probe = mixed_probe(sp);
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const Point p = random_point(rng, sp);
            const IdentityResiduals r = identity_residuals(p, sp, *probe);
            worst = std::max(worst, r.max());
        }
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("identity_residuals: constant test field edge case") {
    SpaceParams sp(5, 1, 1.0);
    auto c = constant_field(3.0, sp);
    std::mt19937_64 rng(19);
    const Point p = random_point(rng, sp);
    const IdentityResiduals r = identity_residuals(p, sp, *c);
    CHECK(r.mixed_grad == 0.0);
    CHECK(r.z_bound == 0.0);
}

TEST_CASE("commutator is X_i, not Z") {
    // The alternative expectation [X_i, Z] = Z must fail on a generic field.
    SpaceParams sp(5, 1, 1.0);
    auto probe = mixed_probe(sp);
    std::mt19937_64 rng(23);
    double xi_worst = 0.0, z_best = 1e30;
    for (int k = 0; k < 20; ++k) {
        const Point p = random_point(rng, sp);
        xi_worst = std::max(xi_worst, commutator_residual(p, sp, *probe, true));
        z_best = std::min(z_best, commutator_residual(p, sp, *probe, false));
    }
    CHECK(xi_worst <= 1e-6);
    CHECK(z_best > 1e-3);
}

TEST_CASE("Delta_X rho * rho / psi recovers Q - 1") {
    std::mt19937_64 rng(29);
    for (double alpha : {1.0, 0.5}) {
        SpaceParams sp(3, 2, alpha);
        for (int k = 0; k < 100; ++k) {
            const Point p = random_point(rng, sp);
            const Jet jr = gauge_jet(p, sp);
            const double lhs = laplace_x(jr, p, sp) * gauge(p, sp) / psi(p, sp);
            CHECK(rel_err(lhs, sp.Q() - 1.0) < 1e-8);
        }
    }
}

TEST_CASE("SpaceParams: derived quantities and capability flags") {
    SpaceParams sp(5, 1, 1.0);
    CHECK(sp.Q() == doctest::Approx(7.0));
    CHECK(sp.hardy_ok());
    CHECK(sp.rellich_ok());
    CHECK(sp.suc_ok());
    SpaceParams sp2(5, 1, 0.5);
    CHECK(sp2.Q() == doctest::Approx(6.5));
    CHECK(sp2.suc_ok());
    SpaceParams sp3(3, 2, 1.0);
    CHECK(sp3.Q() == doctest::Approx(7.0));
    CHECK(!sp3.suc_ok());  // m = 3 <= 4
    CHECK_THROWS_AS(SpaceParams(0, 1, 1.0), InputError);
    CHECK_THROWS_AS(SpaceParams(5, 1, 0.0), InputError);
    CHECK_THROWS_AS(SpaceParams(5, 1, 1.5), InputError);
}
