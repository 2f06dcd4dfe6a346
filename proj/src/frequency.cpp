#include "grushin/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "grushin/geometry.hpp"
#include "grushin/util.hpp"

namespace grushin {

Potential Potential::zero() { return Potential{}; }

Potential Potential::gauge_inverse4(double c0, const SpaceParams& sp) {
    Potential v;
    v.c0 = c0;
    v.name = "c0/rho^4";
    v.weight = {-4.0, 0.0};
    v.fn = [c0, sp](const Point& p) { return c0 / std::pow(gauge(p, sp), 4.0); };
    return v;
}

Potential Potential::gauge_inverse4_reg(double c0, double eps, const SpaceParams& sp) {
    if (!(eps > 0.0)) throw InputError("gauge_inverse4_reg: eps must be positive");
    Potential v;
    v.c0 = c0;
    v.epsilon = eps;
    v.name = "c0/rho_eps^4";
    v.weight = {};  // bounded
    const double p2 = 2.0 * (sp.alpha + 1.0);
    v.fn = [c0, eps, p2, sp](const Point& p) {
        const double rho = gauge(p, sp);
        const double reg = std::pow(std::pow(rho, p2) + std::pow(eps, p2), 1.0 / p2);
        return c0 / std::pow(reg, 4.0);
    };
    return v;
}

SmallnessVerdict smallness_check(double c0, const SpaceParams& sp) {
    if (sp.m <= 2) throw InputError("smallness_check: needs m > 2");
    if (sp.Q() <= 6.0) throw InputError("smallness_check: needs Q > 6");
    SmallnessVerdict v;
    v.c0 = c0;
    v.m = sp.m;
    v.Q = sp.Q();
    const double m2 = sp.m - 2.0;
    const double q6 = v.Q - 6.0;
    const double base = 4.0 * c0 / (m2 * m2 * q6);
    const double lhs1 = base + 4.0 / std::pow(m2, 4.0);
    const double lhs2 = 4.0 * (c0 + 1.0) / (m2 * m2 * q6);
    v.margin_1 = 1.0 - lhs1;
    v.margin_2 = 1.0 - lhs2;
    v.margin_0 = 1.0 - base;
    v.cond_1 = lhs1 < 1.0;
    v.cond_2 = lhs2 < 1.0;
    v.cond_0 = base < 1.0;
    return v;
}

std::vector<double> log_radius_grid(double rmin, double rmax, int per_decade) {
    if (!(rmin > 0.0) || !(rmax > rmin) || per_decade < 1)
        throw InputError("log_radius_grid: need 0 < rmin < rmax, per_decade >= 1");
    const int count = std::max(
        1, static_cast<int>(std::lround(std::log10(rmax / rmin) * per_decade)));
    const double step = std::log(rmax / rmin) / count;
    std::vector<double> r(count + 1);
    for (int i = 0; i <= count; ++i) r[i] = rmin * std::exp(i * step);
    return r;
}

namespace {

struct RawEntry {
    QuadratureResult H1, H2, I1b, I2b;       // boundary
    QuadratureResult I1v, I2v, Mu, Muw;      // volume
};

RawEntry profile_at(const FieldPtr& u, const FieldPtr& w, const Potential& V,
                    double r, const SpaceParams& sp, const QuadratureOptions& opt) {
    const bool have_w = static_cast<bool>(w);
    std::vector<FieldPtr> fields = {u};
    std::vector<int> orders = {have_w ? 1 : 3};
    if (have_w) {
        fields.push_back(w);
        orders.push_back(1);
    }

    // Value of w and its horizontal gradient at a node, from either route.
    auto w_val = [have_w, sp](std::span<const Jet> j, const Point& p) {
        return have_w ? j[1].value : laplace_x(j[0], p, sp);
    };
    auto w_grad2 = [have_w, sp](std::span<const Jet> j, const Point& p) {
        if (have_w) return horizontal_gradient_norm2(j[1], p, sp);
        return grad_laplace_x_norm2(j[0], p, sp);
    };
    auto w_xgrad = [have_w, sp](std::span<const Jet> j, const Point& p,
                                std::array<double, kMaxDim>& g) {
        if (have_w)
            horizontal_gradient(j[1], p, sp, g);
        else
            grad_laplace_x(j[0], p, sp, g);
    };

    std::vector<BatchIntegrand> vol(4);
    vol[0].fn = [sp, w_val](std::span<const Jet> j, const Point& p) {
        return horizontal_gradient_norm2(j[0], p, sp) + j[0].value * w_val(j, p);
    };
    vol[1].weight = V.weight;
    vol[1].fn = [sp, w_val, w_grad2, &V](std::span<const Jet> j, const Point& p) {
        double v = w_grad2(j, p);
        if (!V.is_zero()) v += V(p) * w_val(j, p) * j[0].value;
        return v;
    };
    vol[2].fn = [sp](std::span<const Jet> j, const Point& p) {
        return j[0].value * j[0].value * psi(p, sp);
    };
    vol[3].fn = [sp, w_val](std::span<const Jet> j, const Point& p) {
        const double wv = w_val(j, p);
        return (j[0].value * j[0].value + wv * wv) * psi(p, sp);
    };

    std::vector<BatchIntegrand> bd(4);
    bd[0].fn = [sp](std::span<const Jet> j, const Point& p) {
        return j[0].value * j[0].value * psi(p, sp);
    };
    bd[1].fn = [sp, w_val](std::span<const Jet> j, const Point& p) {
        const double wv = w_val(j, p);
        return wv * wv * psi(p, sp);
    };
    // boundary energy forms u (grad_X u . grad_X rho), w (grad_X w . grad_X rho);
    // grad_X rho comes from the closed-form gauge jet, not the (2.9) identity.
    bd[2].fn = [sp](std::span<const Jet> j, const Point& p) {
        const Jet jr = gauge_jet(p, sp);
        std::array<double, kMaxDim> gu{}, gr{};
        horizontal_gradient(j[0], p, sp, gu);
        horizontal_gradient(jr, p, sp, gr);
        double dot = 0.0;
        for (int i = 0; i < sp.dim(); ++i) dot += gu[i] * gr[i];
        return j[0].value * dot;
    };
    bd[3].fn = [sp, w_val, w_xgrad](std::span<const Jet> j, const Point& p) {
        const Jet jr = gauge_jet(p, sp);
        std::array<double, kMaxDim> gw{}, gr{};
        w_xgrad(j, p, gw);
        horizontal_gradient(jr, p, sp, gr);
        double dot = 0.0;
        for (int i = 0; i < sp.dim(); ++i) dot += gw[i] * gr[i];
        return w_val(j, p) * dot;
    };

    RawEntry e;
    const auto vres = ball_batch(fields, orders, vol, r, sp, opt);
    e.I1v = vres[0];
    e.I2v = vres[1];
    e.Mu = vres[2];
    e.Muw = vres[3];
    const auto bres = sphere_batch(fields, orders, bd, r, sp, opt);
    e.H1 = bres[0];
    e.H2 = bres[1];
    e.I1b = bres[2];
    e.I2b = bres[3];
    return e;
}

} // namespace

FrequencyProfile compute_profile(const FieldPtr& u, const FieldPtr& w,
                                 const Potential& V, const SpaceParams& sp,
                                 std::span<const double> radii,
                                 const QuadratureOptions& opt) {
    if (radii.empty()) throw InputError("compute_profile: empty radius grid");
    FrequencyProfile prof;
    prof.sp = sp;
    prof.entries.reserve(radii.size());

    for (double r : radii) {
        const RawEntry q = profile_at(u, w, V, r, sp, opt);
        ProfileEntry e;
        e.r = r;
        const double r4 = r * r * r * r;
        e.H1 = q.H1.value;
        e.H2 = q.H2.value;
        e.H = e.H1 + r4 * e.H2;
        e.I1 = q.I1v.value;
        e.I1b = q.I1b.value;
        e.I2 = q.I2v.value;
        e.I2b = q.I2b.value;
        e.I = e.I1 + r4 * e.I2;
        e.Mu = q.Mu.value;
        e.Muw = q.Muw.value;
        e.eH1 = q.H1.error;
        e.eH2 = q.H2.error;
        e.eI1 = q.I1v.error;
        e.eI1b = q.I1b.error;
        e.eI2 = q.I2v.error;
        e.eI2b = q.I2b.error;
        e.eMu = q.Mu.error;
        e.eMuw = q.Muw.error;
        e.eH = e.eH1 + r4 * e.eH2;
        e.eI = e.eI1 + r4 * e.eI2;
        if (e.H <= 3.0 * e.eH) {
            prof.truncated = true;
            prof.truncated_at = r;
            break;
        }
        e.N = r * e.I / e.H;
        e.eN = std::abs(r) * (e.eI / e.H + std::abs(e.I) * e.eH / (e.H * e.H));
        prof.entries.push_back(e);
    }
    if (prof.entries.empty())
        throw DegenerateH("compute_profile: H not positive at the smallest radius");
    return prof;
}

namespace {

/// Verify the radius grid is log-uniform and return the log step.
double log_step(const FrequencyProfile& p) {
    if (p.entries.size() < 5)
        throw InsufficientRange("profile too short for finite differences");
    const double d = std::log(p.entries[1].r / p.entries[0].r);
    for (std::size_t i = 1; i + 1 < p.entries.size(); ++i) {
        const double di = std::log(p.entries[i + 1].r / p.entries[i].r);
        if (std::abs(di - d) > 1e-6 * std::abs(d))
            throw InputError("radius grid must be log-uniform for derivatives");
    }
    return d;
}

} // namespace

HDerivativeCheck check_H_derivative(const FrequencyProfile& p) {
    const double d = log_step(p);
    HDerivativeCheck out;
    const auto& e = p.entries;
    for (std::size_t i = 2; i + 2 < e.size(); ++i) {
        // five-point derivative of H with respect to log r
        const double dH =
            (e[i - 2].H - 8.0 * e[i - 1].H + 8.0 * e[i + 1].H - e[i + 2].H) /
            (12.0 * d);
        const double hp = dH / e[i].r;
        const double rhs = (p.sp.Q() - 1.0) * e[i].H / e[i].r + 2.0 * e[i].I +
                           4.0 * std::pow(e[i].r, 3.0) * e[i].H2;
        const double scale = std::max({std::abs(hp), std::abs(rhs), 1e-300});
        out.r.push_back(e[i].r);
        out.residual.push_back(std::abs(hp - rhs) / scale);
        out.max_residual = std::max(out.max_residual, out.residual.back());
    }
    if (out.r.empty()) throw InsufficientRange("check_H_derivative: grid too short");
    return out;
}

MonotonicityResult check_monotonicity(const FrequencyProfile& p, double r0) {
    const double d = log_step(p);
    const auto& e = p.entries;
    MonotonicityResult out;

    std::size_t ir0 = e.size() - 1;
    for (std::size_t i = 0; i < e.size(); ++i)
        if (e[i].r <= r0 * (1.0 + 1e-12)) ir0 = i;
    out.r0 = e[ir0].r;
    out.n_r0 = e[ir0].N;
    const double threshold = std::max(1.0, out.n_r0);

    for (std::size_t i = 0; i < ir0; ++i)
        if (e[i].N > threshold + 1e-12) out.omega.push_back(static_cast<int>(i));
    out.omega_empty = out.omega.empty();
    if (out.omega_empty) return out;

    double beta = 0.0;
    std::vector<double> slopes(e.size(), 0.0);
    for (int i : out.omega) {
        if (i == 0 || i + 1 >= static_cast<int>(e.size())) continue;
        if (e[i - 1].N <= 0.0 || e[i + 1].N <= 0.0) continue;
        const double slope =
            (std::log(e[i + 1].N) - std::log(e[i - 1].N)) / (2.0 * d);
        slopes[i] = slope;
        beta = std::max(beta, -slope);
    }
    out.beta_hat = beta;
    int violations = 0;
    for (int i : out.omega)
        if (slopes[i] < -beta * (1.0 + 1e-9) - 1e-12) ++violations;
    out.violation_measure =
        static_cast<double>(violations) / static_cast<double>(out.omega.size());
    return out;
}

namespace {

/// Linear interpolation of log(values[i]) at log-radius lr.
double log_interp(const std::vector<ProfileEntry>& e, double lr,
                  double ProfileEntry::*member) {
    const double lr0 = std::log(e.front().r);
    const double d = std::log(e[1].r / e[0].r);
    const double pos = (lr - lr0) / d;
    const auto i = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(e.size() - 2)));
    const double frac = pos - static_cast<double>(i);
    const double a = std::log(e[i].*member);
    const double b = std::log(e[i + 1].*member);
    return a + frac * (b - a);
}

} // namespace

DoublingResult check_doubling(const FrequencyProfile& p, double beta_hat) {
    (void)log_step(p);
    const auto& e = p.entries;
    DoublingResult out;
    out.gamma_from_beta = beta_hat > 2.0;
    out.gamma_hat = out.gamma_from_beta ? beta_hat - 2.0 : 1.0;

    const double rmax = e.back().r;
    const double ln2 = std::log(2.0);
    double a_hat = 0.0;
    std::vector<double> z, ld;
    for (const auto& en : e) {
        if (2.0 * en.r > rmax * (1.0 + 1e-12)) break;
        if (en.Muw <= 0.0 || en.H <= 0.0) continue;
        const double lr2 = std::log(2.0 * en.r);
        const double D = std::exp(log_interp(e, lr2, &ProfileEntry::Muw) -
                                  std::log(en.Muw));
        out.r.push_back(en.r);
        out.D.push_back(D);
        out.max_D = std::max(out.max_D, D);
        const double g = log_interp(e, lr2, &ProfileEntry::H) - std::log(en.H) -
                         (p.sp.Q() + 3.0) * ln2;
        a_hat = std::max(a_hat, std::max(0.0, g) * std::pow(en.r, out.gamma_hat));
        z.push_back(std::pow(en.r, -out.gamma_hat));
        ld.push_back(std::log(D));
    }
    if (out.r.empty())
        throw InsufficientRange("check_doubling: no radius with 2r inside the grid");
    out.A_hat = a_hat;
    const LineFit f = fit_line(z, ld);
    out.A_fit = f.slope;
    out.C_hat = std::exp(f.intercept);

    out.h_form_holds = true;
    for (std::size_t i = 0; i < out.r.size(); ++i) {
        const double lr2 = std::log(2.0 * out.r[i]);
        const double lhs = log_interp(e, lr2, &ProfileEntry::H);
        const double idx = (std::log(out.r[i]) - std::log(e.front().r)) /
                           std::log(e[1].r / e[0].r);
        const auto k = static_cast<std::size_t>(std::lround(idx));
        const double rhs = std::log(e[k].H) + (p.sp.Q() + 3.0) * ln2 +
                           out.A_hat * std::pow(out.r[i], -out.gamma_hat);
        if (lhs > rhs + 1e-9) out.h_form_holds = false;
    }
    return out;
}

CaccioppoliResult check_caccioppoli(const FieldPtr& u, const FieldPtr& w,
                                    const Potential& V, double r,
                                    const SpaceParams& sp,
                                    const QuadratureOptions& opt) {
    const bool have_w = static_cast<bool>(w);
    std::vector<FieldPtr> fields = {u};
    std::vector<int> orders = {have_w ? 0 : 2};
    if (have_w) {
        fields.push_back(w);
        orders.push_back(0);
    }
    auto lap_val = [have_w, sp](std::span<const Jet> j, const Point& p) {
        return have_w ? j[1].value : laplace_x(j[0], p, sp);
    };

    CaccioppoliResult out;
    {
        std::vector<BatchIntegrand> items(1);
        items[0].fn = [lap_val](std::span<const Jet> j, const Point& p) {
            const double v = lap_val(j, p);
            return v * v;
        };
        out.lhs = ball_batch(fields, orders, items, r, sp, opt)[0].value;
    }
    {
        const Cutoff eta(r);
        QuadratureOptions o2 = opt;
        o2.radial_breaks.push_back(r);
        std::vector<BatchIntegrand> items(2);
        items[0].weight = V.weight;
        items[0].fn = [&eta, &V, sp](std::span<const Jet> j, const Point& p) {
            if (V.is_zero()) return 0.0;
            const double ev = eta.value(gauge(p, sp));
            return V(p) * j[0].value * j[0].value * ev * ev * ev * ev;
        };
        items[1].fn = [](std::span<const Jet> j, const Point&) {
            return j[0].value * j[0].value;
        };
        std::vector<int> vorders = orders;
        vorders[0] = 0;
        const auto res = ball_batch(fields, vorders, items, 2.0 * r, sp, o2);
        out.potential_term = 2.0 * res[0].value;
        out.mass = res[1].value;
    }
    out.empirical_c =
        out.mass > 0.0
            ? std::max(0.0, out.lhs - out.potential_term) * std::pow(r, 4.0) / out.mass
            : 0.0;
    return out;
}

std::string to_string(VanishingClass c) {
    return c == VanishingClass::FINITE_ORDER ? "FINITE_ORDER" : "SUPER_POLYNOMIAL";
}

VanishingFit vanishing_order_fit(std::span<const double> r, std::span<const double> M) {
    if (r.size() != M.size())
        throw InputError("vanishing_order_fit: mismatched arrays");
    std::vector<double> lr, lm;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] > 0.0 && M[i] > 0.0) {
            lr.push_back(std::log(r[i]));
            lm.push_back(std::log(M[i]));
        }
    }
    if (lr.size() < 5)
        throw InsufficientRange("vanishing_order_fit: need at least 5 positive samples");

    VanishingFit out;
    out.k_hat = fit_line(lr, lm).slope;

    // local slopes, ordered by increasing radius
    std::vector<std::size_t> idx(lr.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return lr[a] < lr[b]; });
    std::vector<double> slopes;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i)
        slopes.push_back((lm[idx[i + 1]] - lm[idx[i]]) / (lr[idx[i + 1]] - lr[idx[i]]));
    const std::size_t third = std::max<std::size_t>(1, slopes.size() / 3);
    double small_r = 0.0, large_r = 0.0;
    for (std::size_t i = 0; i < third; ++i) small_r += slopes[i];
    for (std::size_t i = slopes.size() - third; i < slopes.size(); ++i)
        large_r += slopes[i];
    small_r /= third;
    large_r /= third;
    out.slope_growth = large_r != 0.0 ? small_r / large_r : 0.0;
    out.cls = out.slope_growth > 1.5 ? VanishingClass::SUPER_POLYNOMIAL
                                     : VanishingClass::FINITE_ORDER;

    // exponential model log(-log M) = log B + gamma log(1/r), using samples
    // where -log M is safely positive
    std::vector<double> xe, ye;
    for (std::size_t i = 0; i < lr.size(); ++i) {
        if (lm[i] < -1.0) {
            xe.push_back(-lr[i]);
            ye.push_back(std::log(-lm[i]));
        }
    }
    if (xe.size() >= 5) {
        const LineFit f = fit_line(xe, ye);
        out.gamma_hat = f.slope;
        out.B_hat = std::exp(f.intercept);
    }
    return out;
}

void write_profile_csv(const std::string& path, const FrequencyProfile& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("write_profile_csv: cannot open " + path);
    out << "r,H1,H2,H,I1,I1b,I2,I2b,I,N,Mu,Muw,eH1,eH2,eI1,eI1b,eI2,eI2b,eH,eI,eN,"
           "eMu,eMuw\r\n";
    for (const auto& e : p.entries) {
        out << format_double(e.r) << "," << format_double(e.H1) << ","
            << format_double(e.H2) << "," << format_double(e.H) << ","
            << format_double(e.I1) << "," << format_double(e.I1b) << ","
            << format_double(e.I2) << "," << format_double(e.I2b) << ","
            << format_double(e.I) << "," << format_double(e.N) << ","
            << format_double(e.Mu) << "," << format_double(e.Muw) << ","
            << format_double(e.eH1) << "," << format_double(e.eH2) << ","
            << format_double(e.eI1) << "," << format_double(e.eI1b) << ","
            << format_double(e.eI2) << "," << format_double(e.eI2b) << ","
            << format_double(e.eH) << "," << format_double(e.eI) << ","
            << format_double(e.eN) << "," << format_double(e.eMu) << ","
            << format_double(e.eMuw) << "\r\n";
    }
}

} // namespace grushin
