#include "grushin/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "grushin/geometry.hpp"
#include "grushin/util.hpp"

namespace grushin {

double PolarChart::s(double rho, double theta) const {
    return rho * std::pow(std::sin(theta), 1.0 / (sp.alpha + 1.0));
}

double PolarChart::t(double rho, double theta) const {
    return std::pow(rho, sp.alpha + 1.0) * std::cos(theta) / (sp.alpha + 1.0);
}

double PolarChart::density(double rho, double theta) const {
    const double a = sp.alpha;
    const double es = (sp.m - 1.0 - a) / (a + 1.0);
    const double c = unit_sphere_area(sp.m) * unit_sphere_area(sp.n) /
                     std::pow(a + 1.0, sp.n);
    return c * std::pow(rho, sp.Q() - 1.0) * std::pow(std::sin(theta), es) *
           std::pow(std::cos(theta), sp.n - 1.0);
}

namespace {

void check_integrable(const WeightSpec& w, const SpaceParams& sp, bool radial) {
    if (sp.m + w.x_exp <= 0.0)
        throw NonIntegrableWeight("weight |x|^" + format_double(w.x_exp) +
                                  " is not integrable across the axis for m = " +
                                  std::to_string(sp.m));
    if (radial && sp.Q() + w.rho_exp + w.x_exp <= 0.0)
        throw NonIntegrableWeight("weight rho^" + format_double(w.rho_exp) +
                                  " |x|^" + format_double(w.x_exp) +
                                  " diverges at the origin for Q = " +
                                  format_double(sp.Q()));
}

/// Dyadic grading depth for a local power-law exponent e (> -1). Integer
/// non-negative exponents are smooth; everything else gets enough dyadic
/// levels that the unresolved stub mass falls below the tolerance.
int grading_depth(double e, double tol, int min_depth) {
    const bool smooth = e >= -1e-12 && std::abs(e - std::round(e)) < 1e-9;
    if (smooth) return min_depth;
    const int J = static_cast<int>(std::ceil((-std::log2(tol) + 4.0) / (1.0 + e)));
    return std::clamp(J, std::max(6, min_depth), 64);
}

/// Panel edges on [0, L], dyadically graded toward both ends, with optional
/// interior breakpoints inserted.
std::vector<double> graded_edges(double L, int depth_left, int depth_right,
                                 std::span<const double> breaks) {
    std::vector<double> e;
    const double half = 0.5 * L;
    e.push_back(0.0);
    for (int j = depth_left; j >= 1; --j) e.push_back(half * std::pow(0.5, j));
    e.push_back(half);
    for (int j = 1; j <= depth_right; ++j) e.push_back(L - half * std::pow(0.5, j));
    e.push_back(L);
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    for (double b : breaks) {
        if (b <= 0.0 || b >= L) continue;
        bool close = false;
        for (double x : e)
            if (std::abs(x - b) < 1e-12 * L) close = true;
        if (!close) e.insert(std::upper_bound(e.begin(), e.end(), b), b);
    }
    return e;
}

/// Subdivide every skeleton cell into nsub equal panels.
std::vector<std::pair<double, double>> subdivide(std::span<const double> edges,
                                                 int nsub) {
    std::vector<std::pair<double, double>> p;
    p.reserve((edges.size() - 1) * nsub);
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
        const double a = edges[c], b = edges[c + 1];
        for (int k = 0; k < nsub; ++k)
            p.emplace_back(a + (b - a) * k / nsub, a + (b - a) * (k + 1) / nsub);
    }
    return p;
}

struct NodeContext {
    std::span<const FieldPtr> fields;
    std::span<const int> jet_orders;
    std::span<const BatchIntegrand> items;
};

struct LevelSums {
    std::vector<double> value;  // per item
    std::size_t nodes = 0;
};

LevelSums run_ball_level(const NodeContext& ctx, const SpaceParams& sp,
                         const QuadratureOptions& opt, int level,
                         std::span<const double> redges,
                         std::span<const double> tedges) {
    const PolarChart chart(sp);
    const int nsub = 1 << level;
    const auto rp = subdivide(redges, nsub);
    const auto tp = subdivide(tedges, nsub);
    const auto& [gx, gw] = gauss_legendre(opt.gauss_order);
    const std::size_t nitems = ctx.items.size();
    const std::size_t npanels = rp.size() * tp.size();

    // One partial sum per (item, panel); the per-panel node order is fixed,
    // so any worker layout produces identical slot contents.
    std::vector<double> panel_sums(nitems * npanels, 0.0);
    parallel_for(npanels, opt.threads, [&](std::size_t pa) {
        const auto [rlo, rhi] = rp[pa / tp.size()];
        const auto [tlo, thi] = tp[pa % tp.size()];
        std::vector<Jet> jets(ctx.fields.size());
        std::vector<double> acc(nitems, 0.0);
        for (int i = 0; i < opt.gauss_order; ++i) {
            const double rho = 0.5 * (rlo + rhi) + 0.5 * (rhi - rlo) * gx[i];
            const double wr = 0.5 * (rhi - rlo) * gw[i];
            for (int k = 0; k < opt.gauss_order; ++k) {
                const double th = 0.5 * (tlo + thi) + 0.5 * (thi - tlo) * gx[k];
                const double wt = 0.5 * (thi - tlo) * gw[k];
                const Point p =
                    Point::representative(chart.s(rho, th), chart.t(rho, th), sp);
                const double weight = wr * wt * chart.density(rho, th);
                for (std::size_t f = 0; f < ctx.fields.size(); ++f)
                    jets[f] = ctx.fields[f]->jet(p, ctx.jet_orders[f]);
                for (std::size_t it = 0; it < nitems; ++it)
                    acc[it] += weight * ctx.items[it].fn(std::span<const Jet>(jets), p);
            }
        }
        for (std::size_t it = 0; it < nitems; ++it)
            panel_sums[it * npanels + pa] = acc[it];
    });

    LevelSums out;
    out.nodes = npanels * static_cast<std::size_t>(opt.gauss_order) * opt.gauss_order;
    out.value.resize(nitems);
    for (std::size_t it = 0; it < nitems; ++it)
        out.value[it] =
            pairwise_sum(std::span<const double>(panel_sums).subspan(it * npanels, npanels));
    return out;
}

LevelSums run_sphere_level(const NodeContext& ctx, double r, const SpaceParams& sp,
                           const QuadratureOptions& opt, int level,
                           std::span<const double> tedges) {
    const PolarChart chart(sp);
    const auto tp = subdivide(tedges, 1 << level);
    const auto& [gx, gw] = gauss_legendre(opt.gauss_order);
    const std::size_t nitems = ctx.items.size();
    const std::size_t npanels = tp.size();

    std::vector<double> panel_sums(nitems * npanels, 0.0);
    parallel_for(npanels, opt.threads, [&](std::size_t pa) {
        const auto [tlo, thi] = tp[pa];
        std::vector<Jet> jets(ctx.fields.size());
        std::vector<double> acc(nitems, 0.0);
        for (int k = 0; k < opt.gauss_order; ++k) {
            const double th = 0.5 * (tlo + thi) + 0.5 * (thi - tlo) * gx[k];
            const double wt = 0.5 * (thi - tlo) * gw[k];
            const Point p = Point::representative(chart.s(r, th), chart.t(r, th), sp);
            const double weight = wt * chart.density(r, th);
            for (std::size_t f = 0; f < ctx.fields.size(); ++f)
                jets[f] = ctx.fields[f]->jet(p, ctx.jet_orders[f]);
            for (std::size_t it = 0; it < nitems; ++it)
                acc[it] += weight * ctx.items[it].fn(std::span<const Jet>(jets), p);
        }
        for (std::size_t it = 0; it < nitems; ++it)
            panel_sums[it * npanels + pa] = acc[it];
    });

    LevelSums out;
    out.nodes = npanels * static_cast<std::size_t>(opt.gauss_order);
    out.value.resize(nitems);
    for (std::size_t it = 0; it < nitems; ++it)
        out.value[it] =
            pairwise_sum(std::span<const double>(panel_sums).subspan(it * npanels, npanels));
    return out;
}

std::vector<QuadratureResult> refine(std::size_t nitems,
                                     const QuadratureOptions& opt,
                                     const std::function<LevelSums(int)>& run) {
    LevelSums prev = run(0);
    LevelSums cur = run(1);
    int level = 1;
    auto converged = [&] {
        for (std::size_t i = 0; i < nitems; ++i) {
            const double scale = std::max(std::abs(cur.value[i]), 1e-300);
            if (std::abs(cur.value[i] - prev.value[i]) > opt.rel_tol * scale)
                return false;
        }
        return true;
    };
    while (!converged() && level < opt.max_level) {
        prev = std::move(cur);
        cur = run(++level);
    }
    std::vector<QuadratureResult> out(nitems);
    for (std::size_t i = 0; i < nitems; ++i) {
        out[i].value = cur.value[i];
        out[i].error = std::max(std::abs(cur.value[i] - prev.value[i]),
                                5e-15 * std::abs(cur.value[i]));
        out[i].nodes = cur.nodes;
        out[i].method = QuadMethod::reduced2d;
    }
    return out;
}

void check_biradial_fields(std::span<const FieldPtr> fields) {
    for (const auto& f : fields)
        if (!f->info().biradial)
            throw NonBiradial("reduced2d quadrature needs bi-radial fields; '" +
                              f->info().name + "' is not");
}

// Worst-case grading exponents over a batch.
struct GradingExponents {
    double radial;
    double sin_side;
};

GradingExponents batch_exponents(std::span<const BatchIntegrand> items,
                                 const SpaceParams& sp) {
    GradingExponents g{sp.Q() - 1.0, (sp.m - 1.0 - sp.alpha) / (sp.alpha + 1.0)};
    for (const auto& it : items) {
        g.radial = std::min(g.radial, sp.Q() - 1.0 + it.weight.rho_exp + it.weight.x_exp);
        g.sin_side = std::min(
            g.sin_side, (sp.m - 1.0 - sp.alpha + it.weight.x_exp) / (sp.alpha + 1.0));
    }
    return g;
}

// ---------------------------------------------------------------------------
// QMC: shifted Halton replicates over the bounding box with the gauge-ball
// indicator; spheres by a centered shell difference on shared points.
// ---------------------------------------------------------------------------

std::vector<QuadratureResult> qmc_batch(const NodeContext& ctx, double r,
                                        bool sphere, const SpaceParams& sp,
                                        const QuadratureOptions& opt) {
    const int dim = sp.dim();
    const int reps = std::max(2, opt.qmc_replicates);
    const std::size_t nrep = std::max<std::size_t>(1024, opt.qmc_points / reps);
    const double h = sphere ? r * std::max(opt.qmc_shell_step, 1e-3) : 0.0;
    const double R = sphere ? r + h : r;

    const double cx = R;
    const double cy = std::pow(R, sp.alpha + 1.0) / (sp.alpha + 1.0);
    double box_vol = 1.0;
    for (int i = 0; i < sp.m; ++i) box_vol *= 2.0 * cx;
    for (int j = 0; j < sp.n; ++j) box_vol *= 2.0 * cy;

    // Cranley-Patterson shifts, one per replicate, drawn in fixed order.
    std::mt19937_64 rng(opt.qmc_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> shifts(static_cast<std::size_t>(reps) * dim);
    for (double& v : shifts) v = uni(rng);

    const std::size_t nitems = ctx.items.size();
    constexpr std::size_t kChunks = 64;
    const std::size_t nthr = sphere ? 2 : 1;
    std::vector<double> acc(reps * kChunks * nitems * nthr, 0.0);

    parallel_for(reps * kChunks, opt.threads, [&](std::size_t slot) {
        const std::size_t rep = slot / kChunks;
        const std::size_t chunk = slot % kChunks;
        const std::size_t lo = chunk * nrep / kChunks;
        const std::size_t hi = (chunk + 1) * nrep / kChunks;
        std::vector<Jet> jets(ctx.fields.size());
        std::vector<double> local(nitems * nthr, 0.0);
        std::array<double, kMaxDim> u{};
        for (std::size_t k = lo; k < hi; ++k) {
            halton_point(k, dim, u.data());
            Point p(sp);
            for (int d = 0; d < dim; ++d) {
                double v = u[d] + shifts[rep * dim + d];
                v -= std::floor(v);
                const double c = d < sp.m ? cx : cy;
                p.c[d] = -c + 2.0 * c * v;
            }
            const double rho = gauge(p, sp);
            const bool in_lo = sphere ? (rho <= r - h) : (rho <= r);
            const bool in_hi = sphere ? (rho <= r + h) : in_lo;
            if (!in_hi) continue;
            for (std::size_t f = 0; f < ctx.fields.size(); ++f)
                jets[f] = ctx.fields[f]->jet(p, ctx.jet_orders[f]);
            for (std::size_t i = 0; i < nitems; ++i) {
                const double v = ctx.items[i].fn(std::span<const Jet>(jets), p);
                if (sphere) {
                    if (in_lo) local[i * 2] += v;
                    local[i * 2 + 1] += v;
                } else {
                    local[i] += v;
                }
            }
        }
        double* out = &acc[slot * nitems * nthr];
        for (std::size_t i = 0; i < nitems * nthr; ++i) out[i] = local[i];
    });

    std::vector<QuadratureResult> res(nitems);
    std::vector<double> chunk_vals(kChunks);
    for (std::size_t i = 0; i < nitems; ++i) {
        std::vector<double> rep_means(reps);
        for (int rep = 0; rep < reps; ++rep) {
            double est = 0.0;
            for (std::size_t thr = 0; thr < nthr; ++thr) {
                for (std::size_t c = 0; c < kChunks; ++c)
                    chunk_vals[c] = acc[(((rep * kChunks + c) * nitems) + i) * nthr + thr];
                const double mean =
                    box_vol * pairwise_sum(chunk_vals) / static_cast<double>(nrep);
                if (sphere)
                    est += (thr == 0 ? -mean : mean);
                else
                    est = mean;
            }
            rep_means[rep] = sphere ? est / (2.0 * h) : est;
        }
        const double mean = pairwise_sum(rep_means) / reps;
        double var = 0.0;
        for (double v : rep_means) var += (v - mean) * (v - mean);
        var /= (reps - 1.0);
        res[i].value = mean;
        res[i].error = std::sqrt(var / reps);
        res[i].nodes = nrep * static_cast<std::size_t>(reps);
        res[i].method = QuadMethod::qmc;
    }
    return res;
}

} // namespace

std::vector<QuadratureResult> ball_batch(std::span<const FieldPtr> fields,
                                         std::span<const int> jet_orders,
                                         std::span<const BatchIntegrand> items,
                                         double r, const SpaceParams& sp,
                                         const QuadratureOptions& opt) {
    if (!(r > 0.0)) throw InputError("ball_batch: radius must be positive");
    if (fields.size() != jet_orders.size())
        throw InputError("ball_batch: one jet order per field required");
    for (const auto& it : items) check_integrable(it.weight, sp, /*radial=*/true);
    NodeContext ctx{fields, jet_orders, items};
    if (opt.method == QuadMethod::qmc) return qmc_batch(ctx, r, false, sp, opt);

    check_biradial_fields(fields);
    const GradingExponents ge = batch_exponents(items, sp);
    const auto redges =
        graded_edges(r, grading_depth(ge.radial, opt.rel_tol, opt.min_depth),
                     opt.min_depth, opt.radial_breaks);
    const auto tedges = graded_edges(
        std::numbers::pi / 2.0, grading_depth(ge.sin_side, opt.rel_tol, opt.min_depth),
        std::max(3, opt.min_depth), {});
    return refine(items.size(), opt, [&](int level) {
        return run_ball_level(ctx, sp, opt, level, redges, tedges);
    });
}

std::vector<QuadratureResult> sphere_batch(std::span<const FieldPtr> fields,
                                           std::span<const int> jet_orders,
                                           std::span<const BatchIntegrand> items,
                                           double r, const SpaceParams& sp,
                                           const QuadratureOptions& opt) {
    if (!(r > 0.0)) throw InputError("sphere_batch: radius must be positive");
    if (fields.size() != jet_orders.size())
        throw InputError("sphere_batch: one jet order per field required");
    for (const auto& it : items) check_integrable(it.weight, sp, /*radial=*/false);
    NodeContext ctx{fields, jet_orders, items};
    if (opt.method == QuadMethod::qmc) return qmc_batch(ctx, r, true, sp, opt);

    check_biradial_fields(fields);
    const GradingExponents ge = batch_exponents(items, sp);
    const auto tedges = graded_edges(
        std::numbers::pi / 2.0, grading_depth(ge.sin_side, opt.rel_tol, opt.min_depth),
        std::max(3, opt.min_depth), {});
    return refine(items.size(), opt, [&](int level) {
        return run_sphere_level(ctx, r, sp, opt, level, tedges);
    });
}

namespace {

/// Spot-check that a scalar integrand declared bi-radial really is invariant
/// under block rotations (reflection when a block is one-dimensional).
void probe_biradial(const std::function<double(const Point&)>& f,
                    const SpaceParams& sp, double r) {
    std::mt19937_64 rng(1234577);
    std::uniform_real_distribution<double> uni(0.1, 0.9);
    for (int k = 0; k < 3; ++k) {
        const double s = uni(rng) * r;
        const double t = uni(rng) * std::pow(r, sp.alpha + 1.0) / (sp.alpha + 1.0);
        const Point rep = Point::representative(s, t, sp);
        Point rot(sp);
        if (sp.m >= 2) {
            const double phi = uni(rng) * 3.0;
            rot.x(0) = s * std::cos(phi);
            rot.x(1) = s * std::sin(phi);
        } else {
            rot.x(0) = -s;
        }
        if (sp.n >= 2) {
            const double phi = uni(rng) * 3.0;
            rot.y(0) = t * std::cos(phi);
            rot.y(1) = t * std::sin(phi);
        } else {
            rot.y(0) = -t;
        }
        const double a = f(rep), b = f(rot);
        if (std::abs(a - b) > 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}))
            throw NonBiradial("integrand is not bi-radial (rotation probe failed)");
    }
}

BatchIntegrand wrap_fn(const std::function<double(const Point&)>& f, WeightSpec w) {
    BatchIntegrand it;
    it.weight = w;
    it.fn = [f](std::span<const Jet>, const Point& p) { return f(p); };
    return it;
}

} // namespace

QuadratureResult ball_integral(const std::function<double(const Point&)>& f,
                               bool biradial, WeightSpec w, double r,
                               const SpaceParams& sp, const QuadratureOptions& opt) {
    if (opt.method == QuadMethod::reduced2d) {
        if (!biradial)
            throw NonBiradial("reduced2d ball_integral requires a bi-radial integrand");
        probe_biradial(f, sp, r);
    }
    const BatchIntegrand item = wrap_fn(f, w);
    return ball_batch({}, {}, std::span<const BatchIntegrand>(&item, 1), r, sp, opt)[0];
}

QuadratureResult sphere_integral(const std::function<double(const Point&)>& f,
                                 bool biradial, WeightSpec w, double r,
                                 const SpaceParams& sp, const QuadratureOptions& opt) {
    if (opt.method == QuadMethod::reduced2d) {
        if (!biradial)
            throw NonBiradial("reduced2d sphere_integral requires a bi-radial integrand");
        probe_biradial(f, sp, r);
    }
    const BatchIntegrand item = wrap_fn(f, w);
    return sphere_batch({}, {}, std::span<const BatchIntegrand>(&item, 1), r, sp, opt)[0];
}

QuadratureResult ball_integral(const AnalyticField& f, double r,
                               const SpaceParams& sp, const QuadratureOptions& opt) {
    auto fn = [&f](const Point& p) { return f.value(p); };
    return ball_integral(fn, f.info().biradial, WeightSpec{}, r, sp, opt);
}

QuadratureResult sphere_integral(const AnalyticField& f, double r,
                                 const SpaceParams& sp, const QuadratureOptions& opt) {
    auto fn = [&f](const Point& p) { return f.value(p); };
    return sphere_integral(fn, f.info().biradial, WeightSpec{}, r, sp, opt);
}

} // namespace grushin
