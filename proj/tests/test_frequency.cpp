#include "doctest.h"
#include <filesystem>
#include <fstream>

#include <cmath>

#include "grushin/frequency.hpp"
#include "grushin/geometry.hpp"
#include "support.hpp"

using namespace grushin;

namespace {

QuadratureOptions fopts() {
    QuadratureOptions o;
    o.rel_tol = 1e-8;
    o.threads = 2;
    return o;
}

FrequencyProfile synthetic_profile(const SpaceParams& sp, double rmin, double rmax,
                                   int per_decade,
                                   const std::function<double(double)>& Hfn,
                                   const std::function<double(double)>& Ifn) {
    FrequencyProfile p;
    p.sp = sp;
    for (double r : log_radius_grid(rmin, rmax, per_decade)) {
        ProfileEntry e;
        e.r = r;
        e.H1 = Hfn(r);
        e.H = e.H1;
        e.I1 = Ifn(r);
        e.I = e.I1;
        e.Mu = e.H;   // placeholder mass with the same scaling
        e.Muw = e.H;
        e.N = r * e.I / e.H;
        p.entries.push_back(e);
    }
    return p;
}

} // namespace

TEST_CASE("smallness conditions: frozen arithmetic") {
    SpaceParams sp(5, 1, 1.0);  // Q = 7
    const auto v0 = smallness_check(0.0, sp);
    CHECK(v0.cond_1);  // 0 + 4/81 < 1
    CHECK(v0.margin_1 == doctest::Approx(1.0 - 4.0 / 81.0));
    CHECK(v0.cond_0);

    const auto vb = smallness_check(2.25, sp);  // 4*2.25/9 = 1 exactly
    CHECK(!vb.cond_0);
    CHECK(vb.margin_0 == doctest::Approx(0.0));

    const auto v1 = smallness_check(1.0, sp);  // (1.12): 8/9 < 1
    CHECK(v1.cond_2);
    CHECK(v1.margin_2 == doctest::Approx(1.0 - 8.0 / 9.0));

    SpaceParams bad(3, 1, 0.5);  // Q = 4.5
    CHECK_THROWS_AS((void)smallness_check(0.1, bad), InputError);
}

TEST_CASE("log radius grid is exactly log-uniform") {
    const auto g = log_radius_grid(0.5, 2.0, 16);
    REQUIRE(g.size() >= 5);
    CHECK(g.front() == doctest::Approx(0.5));
    CHECK(g.back() == doctest::Approx(2.0));
    const double d = std::log(g[1] / g[0]);
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
        CHECK(std::log(g[i + 1] / g[i]) == doctest::Approx(d).epsilon(1e-12));
}

TEST_CASE("profile of the constant field: N vanishes identically") {
    SpaceParams sp(5, 1, 1.0);
    auto u = constant_field(1.0, sp);
    const auto radii = log_radius_grid(0.5, 2.0, 48);
    const auto p = compute_profile(u, nullptr, Potential::zero(), sp, radii, fopts());
    REQUIRE(p.entries.size() == radii.size());
    CHECK(!p.truncated);
    for (const auto& e : p.entries) {
        CHECK(std::abs(e.N) <= std::max(e.eN, 1e-10));
        CHECK(e.H > 0.0);
    }

    // Lemma 4.2 residual: H' = (Q-1)H/r exactly here
    const auto hd = check_H_derivative(p);
    CHECK(hd.max_residual < 5e-3);

    // doubling of the mass: D = 2^Q
    const auto db = check_doubling(p, 0.0);
    for (double D : db.D) CHECK(D == doctest::Approx(128.0).epsilon(1e-6));

    // monotonicity: N == 0 is never above max(1, N(r0)): empty Omega
    const auto mono = check_monotonicity(p, p.entries.back().r);
    CHECK(mono.omega_empty);
}

TEST_CASE("profile of rho^2: constant frequency and dilation invariance") {
    SpaceParams sp(5, 1, 1.0);
    auto u = rho_power(2.0, sp);
    const auto radii = log_radius_grid(0.5, 2.0, 48);
    const auto p = compute_profile(u, nullptr, Potential::zero(), sp, radii, fopts());
    REQUIRE(!p.entries.empty());
    const double n0 = p.entries.front().N;
    for (const auto& e : p.entries) {
        CHECK(std::abs(e.N - n0) <= 5e-3 * std::abs(n0));
        // volume/boundary agreement for the first pair: w = Lap_X u holds by
        // construction, so I1 = I1b is an identity. (The I2 pair needs the
        // full system Lap_X w = V u and is checked on solver output.)
        CHECK(std::abs(e.I1 - e.I1b) <=
              3.0 * (e.eI1 + e.eI1b) + 1e-9 * std::abs(e.I1));
    }

    // N[u o delta_lam](r) = N[u](lam r): lam = 2 shifts the log grid by a
    // whole number of steps, so the comparison radii match exactly.
    const double lam = 2.0;
    auto ul = dilated(u, lam, sp);
    const double rs[] = {p.entries[0].r, p.entries[2].r};
    const auto pl = compute_profile(ul, nullptr, Potential::zero(), sp, rs, fopts());
    const double rs2[] = {lam * rs[0], lam * rs[1]};
    const auto pb = compute_profile(u, nullptr, Potential::zero(), sp, rs2, fopts());
    for (std::size_t i = 0; i < pl.entries.size(); ++i)
        CHECK(std::abs(pl.entries[i].N - pb.entries[i].N) <=
              5e-3 * std::abs(pb.entries[i].N));
}

TEST_CASE("Lemma-4.2 identity on an equation-consistent pair") {
    // u = |x|^2 has w = 2m constant and Lap_X w = 0 = V u, so the derivative
    // identity holds exactly; the residual is finite-difference bias only.
    for (double alpha : {1.0, 0.5}) {
        SpaceParams sp(5, 1, alpha);
        auto u = biradial_polynomial({{1.0, 1.0, 0.0}}, sp);
        const auto radii = log_radius_grid(0.5, 2.0, 48);
        const auto p =
            compute_profile(u, nullptr, Potential::zero(), sp, radii, fopts());
        const auto hd = check_H_derivative(p);
        CHECK(hd.max_residual < 5e-3);
        for (const auto& e : p.entries) {
            CHECK(std::abs(e.I1 - e.I1b) <=
                  3.0 * (e.eI1 + e.eI1b) + 1e-9 * std::abs(e.I1));
            CHECK(std::abs(e.I2 - e.I2b) <=
                  3.0 * (e.eI2 + e.eI2b) + 1e-9 * std::max(1.0, std::abs(e.I2)));
        }
    }
}

TEST_CASE("coordinate field through the QMC path: N = 1") {
    SpaceParams sp(5, 1, 1.0);
    auto u = coordinate_field(0, sp);
    QuadratureOptions o = fopts();
    o.method = QuadMethod::qmc;
    o.qmc_points = std::size_t{1} << 18;
    const double radii[] = {0.5, 1.0, 2.0};
    const auto p = compute_profile(u, nullptr, Potential::zero(), sp, radii, o);
    REQUIRE(p.entries.size() == 3);
    for (const auto& e : p.entries) {
        INFO("r=", e.r, " N=", e.N);
        CHECK(std::abs(e.N - 1.0) < 0.03);
    }
}

TEST_CASE("synthetic closed-form profile: the derivative identity is exact") {
    SpaceParams sp(5, 1, 1.0);
    const double Q = sp.Q();
    const auto p = synthetic_profile(
        sp, 0.5, 2.0, 64, [Q](double r) { return std::pow(r, Q - 1.0); },
        [](double) { return 0.0; });
    const auto hd = check_H_derivative(p);
    CHECK(hd.max_residual < 1e-3);
}

TEST_CASE("monotonicity on a synthetic decreasing frequency") {
    SpaceParams sp(5, 1, 1.0);
    const double Q = sp.Q();
    // N(r) = 3 r^{-1/2}: beta_hat should come out 0.5
    const auto p = synthetic_profile(
        sp, 0.1, 1.0, 48, [Q](double r) { return std::pow(r, Q - 1.0); },
        [Q](double r) { return 3.0 * std::pow(r, -0.5) * std::pow(r, Q - 2.0); });
    const auto mono = check_monotonicity(p, 1.0);
    CHECK(!mono.omega_empty);
    CHECK(mono.beta_hat == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(mono.violation_measure == 0.0);

    // constant N profile: the strict inequality makes Omega empty (ties are
    // quadrature noise by policy) and beta_hat stays 0
    const auto pc = synthetic_profile(
        sp, 0.1, 1.0, 48, [Q](double r) { return std::pow(r, Q - 1.0); },
        [Q](double r) { return 2.0 * std::pow(r, Q - 2.0); });
    const auto mc = check_monotonicity(pc, 1.0);
    CHECK(mc.omega_empty);
    CHECK(mc.beta_hat == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("doubling for the coordinate field: 2^{Q+2} via QMC") {
    SpaceParams sp(5, 1, 1.0);
    auto u = coordinate_field(0, sp);
    QuadratureOptions o = fopts();
    o.method = QuadMethod::qmc;
    o.qmc_points = std::size_t{1} << 18;
    const auto radii = log_radius_grid(0.5, 2.0, 8);
    const auto p = compute_profile(u, nullptr, Potential::zero(), sp, radii, o);
    const auto db = check_doubling(p, 0.0);
    REQUIRE(!db.D.empty());
    for (double D : db.D) CHECK(D == doctest::Approx(512.0).epsilon(0.02));
    CHECK(db.h_form_holds);
}

TEST_CASE("vanishing order fits") {
    SpaceParams sp(5, 1, 1.0);

    // x_1: M(r) proportional to r^{Q+2} -> k_hat = 9
    {
        std::vector<double> r, M;
        for (double x : log_radius_grid(0.01, 0.3, 8)) {
            r.push_back(x);
            M.push_back(0.37 * std::pow(x, sp.Q() + 2.0));
        }
        const auto f = vanishing_order_fit(r, M);
        CHECK(f.k_hat == doctest::Approx(9.0).epsilon(1e-6));
        CHECK(f.cls == VanishingClass::FINITE_ORDER);
    }

    // exp(-1/r): super-polynomial with gamma = 1
    {
        std::vector<double> r, M;
        for (double x : log_radius_grid(0.02, 0.5, 8)) {
            r.push_back(x);
            M.push_back(std::exp(-1.0 / x));
        }
        const auto f = vanishing_order_fit(r, M);
        CHECK(f.cls == VanishingClass::SUPER_POLYNOMIAL);
        CHECK(std::abs(f.gamma_hat - 1.0) < 0.05);
    }

    // too few samples
    {
        const std::vector<double> r = {0.1, 0.2, 0.3};
        const std::vector<double> M = {1e-3, 1e-2, 1e-1};
        CHECK_THROWS_AS((void)vanishing_order_fit(r, M), InsufficientRange);
    }
}

TEST_CASE("Caccioppoli check: trivial and homogeneous cases") {
    SpaceParams sp(5, 1, 1.0);
    auto o = fopts();

    const auto c0 =
        check_caccioppoli(constant_field(1.0, sp), nullptr, Potential::zero(), 0.5,
                          sp, o);
    CHECK(c0.lhs == doctest::Approx(0.0));
    CHECK(c0.empirical_c == 0.0);

    auto u = rho_power(2.0, sp);
    std::vector<double> cs;
    for (double r : {0.25, 0.5, 1.0}) {
        const auto c = check_caccioppoli(u, nullptr, Potential::zero(), r, sp, o);
        CHECK(c.empirical_c > 0.0);
        cs.push_back(c.empirical_c);
    }
    for (double c : cs) CHECK(std::abs(c - cs[0]) <= 0.2 * cs[0]);
}

TEST_CASE("profile truncation on loss of H positivity") {
    SpaceParams sp(5, 1, 1.0);
    // A profile whose H estimate goes negative cannot come from real fields,
    // so drive the truncation through the error margin instead: use the
    // synthetic path by checking compute_profile's contract on real fields.
    auto u = constant_field(1.0, sp);
    const auto radii = log_radius_grid(0.5, 1.0, 8);
    const auto p = compute_profile(u, nullptr, Potential::zero(), sp, radii, fopts());
    CHECK(!p.truncated);  // constants keep H strictly positive
}

TEST_CASE("profile CSV writing") {
    SpaceParams sp(5, 1, 1.0);
    auto u = constant_field(1.0, sp);
    const double radii[] = {0.5, 1.0};
    const auto p = compute_profile(u, nullptr, Potential::zero(), sp, radii, fopts());
    const auto tmp = std::filesystem::temp_directory_path() / "grushin_profile.csv";
    write_profile_csv(tmp.string(), p);
    std::ifstream in(tmp);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header.find("r,H1,H2,H,I1,I1b,I2,I2b,I,N") == 0);
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(tmp);
}
