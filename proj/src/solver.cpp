#include "grushin/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "grushin/geometry.hpp"
#include "grushin/util.hpp"

namespace grushin {

namespace {

struct StencilEntry {
    int i, j;
    double coeff;
};

/// Stencil of L at an interior/axis node; neighbors may land on the
/// Dirichlet edges.
void stencil_at(const GridSpec& g, const SpaceParams& sp, int i, int j,
                std::vector<StencilEntry>& out) {
    out.clear();
    const double hs = g.hs(), ht = g.ht();
    const double s = i * hs, t = j * ht;
    const double s2a = std::pow(s * s, sp.alpha);

    auto add = [&out](int ii, int jj, double c) { out.push_back({ii, jj, c}); };

    if (i == 0) {
        const double c = 2.0 * sp.m / (hs * hs);
        add(1, j, c);
        add(0, j, -c);
    } else {
        const double d2 = 1.0 / (hs * hs);
        const double d1 = (sp.m - 1.0) / (s * 2.0 * hs);
        add(i + 1, j, d2 + d1);
        add(i, j, -2.0 * d2);
        add(i - 1, j, d2 - d1);
    }
    if (s2a != 0.0) {
        if (j == 0) {
            const double c = s2a * 2.0 * sp.n / (ht * ht);
            add(i, 1, c);
            add(i, 0, -c);
        } else {
            const double d2 = s2a / (ht * ht);
            const double d1 = s2a * (sp.n - 1.0) / (t * 2.0 * ht);
            add(i, j + 1, d2 + d1);
            add(i, j, -2.0 * d2);
            add(i, j - 1, d2 - d1);
        }
    }
}

} // namespace

BiradialOperator assemble(const GridSpec& grid, const SpaceParams& sp) {
    grid.validate();
    if (grid.ns < 16 || grid.nt < 16)
        throw InputError("assemble: need at least 16 nodes per direction");

    BiradialOperator op;
    op.grid = grid;
    op.sp = sp;
    const int na = op.active_count();
    const int nb = op.boundary_count();

    std::vector<Eigen::Triplet<double>> ta, tb;
    std::vector<StencilEntry> st;
    for (int i = 0; i < op.nact_s(); ++i)
        for (int j = 0; j < op.nact_t(); ++j) {
            stencil_at(grid, sp, i, j, st);
            const int row = op.aidx(i, j);
            for (const auto& e : st) {
                if (e.i == grid.ns - 1 || e.j == grid.nt - 1)
                    tb.emplace_back(row, op.bidx(e.i, e.j), e.coeff);
                else
                    ta.emplace_back(row, op.aidx(e.i, e.j), e.coeff);
            }
        }
    op.A.resize(na, na);
    op.A.setFromTriplets(ta.begin(), ta.end());
    op.B.resize(na, nb);
    op.B.setFromTriplets(tb.begin(), tb.end());
    return op;
}

GridField apply_operator(const BiradialOperator& op, const GridField& u) {
    const GridSpec& g = op.grid;
    if (u.spec().ns != g.ns || u.spec().nt != g.nt)
        throw InputError("apply_operator: grid mismatch");
    Eigen::VectorXd ua(op.active_count()), ub(op.boundary_count());
    for (int i = 0; i < op.nact_s(); ++i)
        for (int j = 0; j < op.nact_t(); ++j) ua[op.aidx(i, j)] = u.at(i, j);
    for (int j = 0; j < g.nt; ++j) ub[op.bidx(g.ns - 1, j)] = u.at(g.ns - 1, j);
    for (int i = 0; i < g.ns - 1; ++i) ub[op.bidx(i, g.nt - 1)] = u.at(i, g.nt - 1);
    const Eigen::VectorXd r = op.A * ua + op.B * ub;
    std::vector<double> out(static_cast<std::size_t>(g.ns) * g.nt, 0.0);
    for (int i = 0; i < op.nact_s(); ++i)
        for (int j = 0; j < op.nact_t(); ++j)
            out[static_cast<std::size_t>(i) * g.nt + j] = r[op.aidx(i, j)];
    return GridField(g, std::move(out));
}

Solution solve(const BVPSpec& spec, const BiradialOperator& op,
               const SolverOptions& opt) {
    const GridSpec& g = spec.grid;
    if (g.ns != op.grid.ns || g.nt != op.grid.nt)
        throw InputError("solve: operator assembled on a different grid");
    if (!spec.u_boundary || !spec.w_boundary)
        throw InputError("solve: Dirichlet data required on the outer edges");

    const int na = op.active_count();
    const int nb = op.boundary_count();
    const double hs = g.hs(), ht = g.ht();

    // Dirichlet vectors.
    Eigen::VectorXd ud(nb), wd(nb);
    for (int j = 0; j < g.nt; ++j) {
        ud[op.bidx(g.ns - 1, j)] = spec.u_boundary(g.S, j * ht);
        wd[op.bidx(g.ns - 1, j)] = spec.w_boundary(g.S, j * ht);
    }
    for (int i = 0; i < g.ns - 1; ++i) {
        ud[op.bidx(i, g.nt - 1)] = spec.u_boundary(i * hs, g.T);
        wd[op.bidx(i, g.nt - 1)] = spec.w_boundary(i * hs, g.T);
    }

    // Node data: excision mask and potential values.
    std::vector<char> excised(na, 0);
    Eigen::VectorXd vvals(na);
    for (int i = 0; i < op.nact_s(); ++i)
        for (int j = 0; j < op.nact_t(); ++j) {
            const int k = op.aidx(i, j);
            const Point p = Point::representative(i * hs, j * ht, op.sp);
            const double rho = gauge(p, op.sp);
            if (spec.excision && rho <= spec.excision->rho_min) {
                excised[k] = 1;
                vvals[k] = 0.0;
                continue;
            }
            const double v = spec.V.is_zero() ? 0.0 : spec.V(p);
            if (!std::isfinite(v))
                throw InputError("solve: potential not finite at a grid node; "
                                 "regularize or excise");
            vvals[k] = v;
        }

    // Monolithic block system [A, -I; -diag(V), A].
    std::vector<Eigen::Triplet<double>> tm;
    tm.reserve(static_cast<std::size_t>(op.A.nonZeros()) * 2 + 2 * na);
    Eigen::VectorXd rhs(2 * na);
    const Eigen::VectorXd bu = op.B * ud;
    const Eigen::VectorXd bw = op.B * wd;

    for (int k = 0; k < op.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.A, k); it; ++it) {
            if (!excised[it.row()]) {
                tm.emplace_back(it.row(), it.col(), it.value());
                tm.emplace_back(na + it.row(), na + it.col(), it.value());
            }
        }
    for (int k = 0; k < na; ++k) {
        if (excised[k]) {
            tm.emplace_back(k, k, 1.0);
            tm.emplace_back(na + k, na + k, 1.0);
            rhs[k] = spec.excision->u_inner;
            rhs[na + k] = spec.excision->w_inner;
            continue;
        }
        tm.emplace_back(k, na + k, -1.0);
        tm.emplace_back(na + k, k, -vvals[k]);
        const int i = k / op.nact_t();
        const int j = k % op.nact_t();
        rhs[k] = -bu[k];
        rhs[na + k] = -bw[k] + (spec.source ? spec.source(i * hs, j * ht) : 0.0);
    }
    Eigen::SparseMatrix<double> M(2 * na, 2 * na);
    M.setFromTriplets(tm.begin(), tm.end());

    Eigen::VectorXd z;
    SolveReport rep;
    if (opt.method == SolveMethod::sparse_lu) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(M);
        lu.factorize(M);
        if (lu.info() != Eigen::Success)
            throw SingularSystem("solve: SparseLU factorization failed");
        z = lu.solve(rhs);
        rep.method = "sparse_lu";
    } else {
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
        it.setTolerance(opt.residual_target * 0.01);
        it.setMaxIterations(opt.max_iterations);
        it.compute(M);
        if (it.info() != Eigen::Success)
            throw SingularSystem("solve: BiCGSTAB preconditioner failed");
        z = it.solve(rhs);
        rep.iterations = static_cast<int>(it.iterations());
        rep.method = "bicgstab";
    }
    const double rhs_norm = rhs.norm();
    rep.residual = (M * z - rhs).norm() / (rhs_norm > 0.0 ? rhs_norm : 1.0);
    if (!std::isfinite(rep.residual) || rep.residual > opt.residual_target)
        throw SolveFailure("solve: relative residual " + format_double(rep.residual) +
                           " misses target " + format_double(opt.residual_target) +
                           " (" + rep.method + ")");

    std::vector<double> uu(static_cast<std::size_t>(g.ns) * g.nt);
    std::vector<double> ww(uu.size());
    for (int i = 0; i < op.nact_s(); ++i)
        for (int j = 0; j < op.nact_t(); ++j) {
            uu[static_cast<std::size_t>(i) * g.nt + j] = z[op.aidx(i, j)];
            ww[static_cast<std::size_t>(i) * g.nt + j] = z[na + op.aidx(i, j)];
        }
    for (int j = 0; j < g.nt; ++j) {
        uu[static_cast<std::size_t>(g.ns - 1) * g.nt + j] = ud[op.bidx(g.ns - 1, j)];
        ww[static_cast<std::size_t>(g.ns - 1) * g.nt + j] = wd[op.bidx(g.ns - 1, j)];
    }
    for (int i = 0; i < g.ns - 1; ++i) {
        uu[static_cast<std::size_t>(i) * g.nt + (g.nt - 1)] = ud[op.bidx(i, g.nt - 1)];
        ww[static_cast<std::size_t>(i) * g.nt + (g.nt - 1)] = wd[op.bidx(i, g.nt - 1)];
    }
    return Solution{GridField(g, std::move(uu)), GridField(g, std::move(ww)), rep};
}

// ---------------------------------------------------------------------------
// Ambient lift
// ---------------------------------------------------------------------------

namespace {

/// Value and first two derivatives of the cubic Lagrange basis through four
/// nodes, evaluated at x.
void lagrange4(const double xs[4], double x, double w0[4], double w1[4],
               double w2[4]) {
    for (int k = 0; k < 4; ++k) {
        double den = 1.0;
        double o[3];
        int no = 0;
        for (int j = 0; j < 4; ++j) {
            if (j == k) continue;
            den *= xs[k] - xs[j];
            o[no++] = xs[j];
        }
        const double a = x - o[0], b = x - o[1], c = x - o[2];
        w0[k] = a * b * c / den;
        w1[k] = (b * c + a * c + a * b) / den;
        w2[k] = 2.0 * (a + b + c) / den;
    }
}

class GridInterpolant final : public AnalyticField {
public:
    GridInterpolant(GridField g, const SpaceParams& sp)
        : g_(std::move(g)), sp_(sp) {
        info_.name = "grid_lift";
        info_.biradial = true;
        info_.max_jet_order = 2;
    }

    Jet jet(const Point& p, int order) const override {
        if (order > 2)
            throw InputError("grid_lift: jets available up to order 2 only");
        const GridSpec& gs = g_.spec();
        const double s = std::sqrt(p.x_norm2());
        const double t = std::sqrt(p.y_norm2());
        if (s > gs.S * (1.0 + 1e-12) || t > gs.T * (1.0 + 1e-12))
            throw OutOfDomain("grid_lift: query outside the (s, t) rectangle");

        double U, Us, Ut, Uss, Ust, Utt;
        interp(s, t, U, Us, Ut, Uss, Ust, Utt);

        Jet j;
        j.dim = p.dim();
        j.value = U;
        if (order < 1) return j;

        const int m = p.m, n = p.n;
        const double si = s > 1e-300 ? 1.0 / s : 0.0;
        const double ti = t > 1e-300 ? 1.0 / t : 0.0;
        for (int i = 0; i < m; ++i) j.grad[i] = p.x(i) * si * Us;
        for (int k = 0; k < n; ++k) j.grad[m + k] = p.y(k) * ti * Ut;
        if (order < 2) return j;

        j.has_hess = true;
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) {
                const double xi = p.x(i) * si, xk = p.x(k) * si;
                double v = Uss * xi * xk + Us * si * ((i == k ? 1.0 : 0.0) - xi * xk);
                j.h(i, k) = v;
            }
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < n; ++k) {
                const double v = Ust * (p.x(i) * si) * (p.y(k) * ti);
                j.h(i, m + k) = v;
                j.h(m + k, i) = v;
            }
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                const double yi = p.y(i) * ti, yk = p.y(k) * ti;
                j.h(m + i, m + k) =
                    Utt * yi * yk + Ut * ti * ((i == k ? 1.0 : 0.0) - yi * yk);
            }
        return j;
    }

private:
    void interp(double s, double t, double& U, double& Us, double& Ut,
                double& Uss, double& Ust, double& Utt) const {
        const GridSpec& gs = g_.spec();
        const double hs = gs.hs(), ht = gs.ht();

        const int ib = window_base(s / hs, gs.ns);
        const int jb = window_base(t / ht, gs.nt);
        double xs[4], ts[4], w0s[4], w1s[4], w2s[4], w0t[4], w1t[4], w2t[4];
        for (int k = 0; k < 4; ++k) {
            xs[k] = (ib + k) * hs;
            ts[k] = (jb + k) * ht;
        }
        lagrange4(xs, s, w0s, w1s, w2s);
        lagrange4(ts, t, w0t, w1t, w2t);

        U = Us = Ut = Uss = Ust = Utt = 0.0;
        for (int a = 0; a < 4; ++a) {
            const int ia = reflect(ib + a, gs.ns);
            for (int b = 0; b < 4; ++b) {
                const int jb2 = reflect(jb + b, gs.nt);
                const double v = g_.at(ia, jb2);
                U += w0s[a] * w0t[b] * v;
                Us += w1s[a] * w0t[b] * v;
                Ut += w0s[a] * w1t[b] * v;
                Uss += w2s[a] * w0t[b] * v;
                Ust += w1s[a] * w1t[b] * v;
                Utt += w0s[a] * w2t[b] * v;
            }
        }
    }

    // 4-point window starting index; may go to -1 (handled by reflection)
    // but is clamped at the outer edge.
    static int window_base(double pos, int nn) {
        int ib = static_cast<int>(std::floor(pos)) - 1;
        ib = std::min(ib, nn - 4);
        return std::max(ib, -1);
    }
    static int reflect(int i, int nn) {
        if (i < 0) i = -i;
        return std::min(i, nn - 1);
    }

    GridField g_;
    SpaceParams sp_;
};

} // namespace

FieldPtr lift_to_ambient(const GridField& g, const SpaceParams& sp) {
    return std::make_shared<GridInterpolant>(g, sp);
}

// ---------------------------------------------------------------------------
// Manufactured-solution study
// ---------------------------------------------------------------------------

std::vector<PowerTerm> mms_exact_u() {
    // Constant on the degenerate axis (so the y-Laplacian carries a factor
    // of |x|^2 and every derived source stays bounded there).
    return {{1.0, 0.0, 0.0}, {1.0, 2.0, 0.0}, {0.5, 3.0, 0.0},
            {1.0, 1.0, 1.0}, {0.5, 1.0, 2.0}};
}

MmsResult mms_study(const SpaceParams& sp, std::span<const int> grids, double S,
                    double T, double c0, double eps, const SolverOptions& opt) {
    const auto ut = mms_exact_u();
    const auto wt = power_laplacian(ut, sp);
    const auto lwt = power_laplacian(wt, sp);
    const Potential V = Potential::gauge_inverse4_reg(c0, eps, sp);

    MmsResult res;
    for (int nn : grids) {
        const GridSpec g{nn, nn, S, T};
        const BiradialOperator op = assemble(g, sp);
        BVPSpec spec;
        spec.grid = g;
        spec.V = V;
        spec.u_boundary = [&ut](double s, double t) {
            return eval_power_terms(ut, s * s, t * t);
        };
        spec.w_boundary = [&wt](double s, double t) {
            return eval_power_terms(wt, s * s, t * t);
        };
        spec.source = [&lwt, &ut, &V, &sp](double s, double t) {
            const Point p = Point::representative(s, t, sp);
            return eval_power_terms(lwt, s * s, t * t) -
                   V(p) * eval_power_terms(ut, s * s, t * t);
        };
        const Solution sol = solve(spec, op, opt);
        res.worst_residual = std::max(res.worst_residual, sol.report.residual);

        double l2 = 0.0, linf = 0.0;
        for (int i = 0; i < g.ns; ++i)
            for (int j = 0; j < g.nt; ++j) {
                const double ex =
                    eval_power_terms(ut, std::pow(i * g.hs(), 2.0),
                                     std::pow(j * g.ht(), 2.0));
                const double d = sol.u.at(i, j) - ex;
                l2 += d * d;
                linf = std::max(linf, std::abs(d));
            }
        l2 = std::sqrt(l2 / (static_cast<double>(g.ns) * g.nt));
        res.grids.push_back(nn);
        res.h.push_back(g.hs());
        res.l2.push_back(l2);
        res.linf.push_back(linf);
    }
    std::vector<double> lh, ll2, llinf;
    for (std::size_t i = 0; i < res.h.size(); ++i) {
        lh.push_back(std::log(res.h[i]));
        ll2.push_back(std::log(res.l2[i]));
        llinf.push_back(std::log(res.linf[i]));
    }
    if (lh.size() >= 2) {
        res.order_l2 = fit_line(lh, ll2).slope;
        res.order_linf = fit_line(lh, llinf).slope;
    }
    return res;
}

} // namespace grushin
