#include "doctest.h"

#include <cmath>

#include "grushin/geometry.hpp"
#include "grushin/solver.hpp"
#include "grushin/util.hpp"
#include "support.hpp"

using namespace grushin;
using testsup::random_point;

namespace {

SolverOptions lu_opts() {
    SolverOptions o;
    o.method = SolveMethod::sparse_lu;
    return o;
}

} // namespace

TEST_CASE("assemble: guards and second-order consistency") {
    SpaceParams sp(5, 1, 0.5);
    CHECK_THROWS_AS((void)assemble(GridSpec{8, 33, 1.0, 0.5}, sp), InputError);

    for (double alpha : {1.0, 0.5}) {
        SpaceParams spa(5, 1, alpha);
        auto u = biradial_polynomial({{1.0, 1.0, 1.0}, {1.0, 2.0, 0.0}}, spa);
        std::vector<double> lh, le;
        for (int nn : {17, 33, 65}) {
            const GridSpec g{nn, nn, 1.0, 0.5};
            const BiradialOperator op = assemble(g, spa);
            const GridField uf = sample_to_grid(*u, g);
            const GridField lap = apply_operator(op, uf);
            double l2 = 0.0;
            int cnt = 0;
            for (int i = 0; i < g.ns - 1; ++i)
                for (int j = 0; j < g.nt - 1; ++j) {
                    const Point p =
                        Point::representative(i * g.hs(), j * g.ht(), spa);
                    const double want = u->closed_laplacian(p);
                    const double d = lap.at(i, j) - want;
                    l2 += d * d;
                    ++cnt;
                }
            lh.push_back(std::log(g.hs()));
            le.push_back(std::log(std::sqrt(l2 / cnt) + 1e-300));
        }
        const double order = fit_line(lh, le).slope;
        INFO("alpha=", alpha, " consistency order=", order);
        CHECK(order >= 1.9);
    }
}

TEST_CASE("trivial solve: constant data reproduced to solver precision") {
    SpaceParams sp(5, 1, 1.0);
    const GridSpec g{33, 33, 1.0, 0.5};
    const BiradialOperator op = assemble(g, sp);
    BVPSpec spec;
    spec.grid = g;
    spec.V = Potential::zero();
    spec.u_boundary = [](double, double) { return 1.0; };
    spec.w_boundary = [](double, double) { return 0.0; };
    const Solution sol = solve(spec, op, lu_opts());
    CHECK(sol.report.residual < 1e-10);
    for (int i = 0; i < g.ns; ++i)
        for (int j = 0; j < g.nt; ++j) {
            CHECK(std::abs(sol.u.at(i, j) - 1.0) < 1e-10);
            CHECK(std::abs(sol.w.at(i, j)) < 1e-10);
        }
}

TEST_CASE("manufactured solution: second-order convergence") {
    const int grids[] = {33, 65, 129};
    for (double alpha : {1.0, 0.5}) {
        SpaceParams sp(5, 1, alpha);
        const auto res = mms_study(sp, grids, 1.0, 0.5, 1.0, 0.05, lu_opts());
        INFO("alpha=", alpha, " order_l2=", res.order_l2,
             " order_linf=", res.order_linf);
        CHECK(res.order_l2 >= 1.9);
        CHECK(res.order_linf >= 1.7);
        CHECK(res.worst_residual < 1e-10);
    }
}

TEST_CASE("discrete comparison smoke test: nonnegative data stays nonnegative") {
    SpaceParams sp(5, 1, 0.5);
    const GridSpec g{33, 33, 1.0, 0.5};
    const BiradialOperator op = assemble(g, sp);
    BVPSpec spec;
    spec.grid = g;
    spec.V = Potential::zero();
    spec.u_boundary = [](double s, double t) { return 0.2 + s * s + 0.5 * t; };
    spec.w_boundary = [](double, double) { return 0.0; };
    const Solution sol = solve(spec, op, lu_opts());
    double data_max = 0.0;
    for (int j = 0; j < g.nt; ++j)
        data_max = std::max(data_max, spec.u_boundary(g.S, j * g.ht()));
    for (int i = 0; i < g.ns; ++i)
        data_max = std::max(data_max, spec.u_boundary(i * g.hs(), g.T));
    const double floor = -10.0 * g.hs() * g.hs() * data_max;
    for (int i = 0; i < g.ns; ++i)
        for (int j = 0; j < g.nt; ++j) CHECK(sol.u.at(i, j) >= floor);
}

TEST_CASE("excised annulus: inner Dirichlet values are honored") {
    SpaceParams sp(5, 1, 1.0);
    const GridSpec g{33, 33, 1.0, 0.5};
    const BiradialOperator op = assemble(g, sp);
    BVPSpec spec;
    spec.grid = g;
    spec.V = Potential::gauge_inverse4(1.0, sp);  // singular; excision protects it
    spec.excision = Excision{0.08, 1.0, 0.0};
    spec.u_boundary = [](double, double) { return 1.0; };
    spec.w_boundary = [](double, double) { return 0.0; };
    const Solution sol = solve(spec, op, lu_opts());
    CHECK(sol.report.residual < 1e-10);
    int excised_nodes = 0;
    for (int i = 0; i < g.ns - 1; ++i)
        for (int j = 0; j < g.nt - 1; ++j) {
            const Point p = Point::representative(i * g.hs(), j * g.ht(), sp);
            if (gauge(p, sp) <= 0.08) {
                CHECK(sol.u.at(i, j) == doctest::Approx(1.0));
                CHECK(sol.w.at(i, j) == doctest::Approx(0.0));
                ++excised_nodes;
            }
        }
    CHECK(excised_nodes > 0);

    // without excision or regularization the singular potential is rejected
    BVPSpec bad = spec;
    bad.excision.reset();
    CHECK_THROWS_AS((void)solve(bad, op, lu_opts()), InputError);
}

TEST_CASE("iterative method with a starved iteration budget reports failure") {
    SpaceParams sp(5, 1, 1.0);
    const GridSpec g{17, 17, 1.0, 0.5};
    const BiradialOperator op = assemble(g, sp);
    BVPSpec spec;
    spec.grid = g;
    spec.V = Potential::zero();
    spec.u_boundary = [](double s, double t) { return 1.0 + s + t; };
    spec.w_boundary = [](double, double) { return 0.0; };
    SolverOptions o;
    o.method = SolveMethod::bicgstab;
    o.max_iterations = 1;
    CHECK_THROWS_AS((void)solve(spec, op, o), SolveFailure);
}

TEST_CASE("lift_to_ambient: node round trip, derivatives, domain guard") {
    SpaceParams sp(5, 1, 1.0);
    auto r2 = rho_power(2.0, sp);

    // exact round trip on grid nodes
    {
        const GridSpec g{33, 33, 1.0, 0.5};
        const GridField gf = sample_to_grid(*r2, g);
        auto lift = lift_to_ambient(gf, sp);
        for (int i = 0; i < g.ns; i += 4)
            for (int j = 0; j < g.nt; j += 4) {
                const Point p =
                    Point::representative(i * g.hs(), j * g.ht(), sp);
                CHECK(lift->value(p) == doctest::Approx(gf.at(i, j)).epsilon(1e-12));
            }
        Point outside(sp);
        outside.x(0) = 1.9;
        CHECK_THROWS_AS((void)lift->value(outside), OutOfDomain);
        CHECK_THROWS_AS((void)lift->jet(Point::representative(0.5, 0.1, sp), 3),
                        InputError);
    }

    // interpolated sub-Laplacian of sampled rho^2 converges to 2 Q psi at
    // second order
    std::mt19937_64 rng(97);
    std::vector<double> lh, le;
    for (int nn : {33, 65, 129}) {
        const GridSpec g{nn, nn, 1.0, 0.5};
        const GridField gf = sample_to_grid(*r2, g);
        auto lift = lift_to_ambient(gf, sp);
        double worst = 0.0;
        std::mt19937_64 rng2(7);
        for (int k = 0; k < 200; ++k) {
            const Point p = random_point(rng2, sp, 0.1, 0.35);
            const Jet j = lift->jet(p, 2);
            const double got = laplace_x(j, p, sp);
            const double want = 2.0 * sp.Q() * psi(p, sp);
            worst = std::max(worst, std::abs(got - want));
        }
        lh.push_back(std::log(g.hs()));
        le.push_back(std::log(worst));
    }
    const double order = fit_line(lh, le).slope;
    INFO("lift laplacian order=", order);
    CHECK(order >= 1.9);
}

TEST_CASE("sampled interpolation error decays at cubic-interpolant order") {
    SpaceParams sp(5, 1, 1.0);
    auto r2 = rho_power(2.0, sp);
    std::vector<double> lh, le;
    for (int nn : {17, 33, 65}) {
        const GridSpec g{nn, nn, 1.0, 0.5};
        const GridField gf = sample_to_grid(*r2, g);
        auto lift = lift_to_ambient(gf, sp);
        double worst = 0.0;
        std::mt19937_64 rng(13);
        for (int k = 0; k < 300; ++k) {
            const Point p = random_point(rng, sp, 0.05, 0.4);
            worst = std::max(worst, std::abs(lift->value(p) - r2->value(p)));
        }
        lh.push_back(std::log(g.hs()));
        le.push_back(std::log(worst + 1e-300));
    }
    const double order = fit_line(lh, le).slope;
    INFO("value interpolation order=", order);
    CHECK(order >= 1.9);  // comfortably exceeded by the cubic window
}

TEST_CASE("frequency pipeline compatibility on lifted manufactured fields") {
    SpaceParams sp(5, 1, 1.0);
    const auto ut = mms_exact_u();
    const auto wt = power_laplacian(ut, sp);
    const GridSpec g{65, 65, 1.0, 0.5};
    const GridField gu = sample_to_grid(*biradial_polynomial(ut, sp), g);
    const GridField gw = sample_to_grid(*biradial_polynomial(wt, sp), g);
    auto lu = lift_to_ambient(gu, sp);
    auto lw = lift_to_ambient(gw, sp);

    QuadratureOptions qo;
    qo.rel_tol = 1e-8;
    qo.threads = 2;
    const double radii[] = {0.2, 0.3, 0.4};
    const auto p = compute_profile(lu, lw, Potential::zero(), sp, radii, qo);
    REQUIRE(p.entries.size() == 3);
    for (const auto& e : p.entries) {
        const double interp_budget =
            10.0 * g.hs() * g.hs() * std::max(1.0, std::abs(e.I1));
        CHECK(std::abs(e.I1 - e.I1b) <=
              3.0 * (e.eI1 + e.eI1b) + interp_budget);
    }
}
