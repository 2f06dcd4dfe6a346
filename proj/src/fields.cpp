#include "grushin/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "grushin/geometry.hpp"
#include "grushin/util.hpp"

namespace grushin {

double AnalyticField::closed_laplacian(const Point&) const {
    throw InputError("closed_laplacian: field '" + info_.name + "' declares none");
}

void GridSpec::validate() const {
    if (ns < 2 || nt < 2 || !(S > 0.0) || !(T > 0.0))
        throw InputError("GridSpec: need ns, nt >= 2 and positive extents");
}

// ---------------------------------------------------------------------------
// Bi-radial fields: one Taylor3 expression in (a, b) = (|x|^2, |y|^2)
// produces the full ambient jet by the chain rule.
// ---------------------------------------------------------------------------

namespace {

class BiradialField : public AnalyticField {
public:
    Jet jet(const Point& p, int order) const override {
        const double a = p.x_norm2();
        const double b = p.y_norm2();
        Jet j;
        j.dim = p.dim();
        if (order <= 0) {
            j.value = value_ab(a, b);
            if (!std::isfinite(j.value))
                throw DegeneratePoint("field '" + info_.name + "': value undefined");
            return j;
        }
        const Taylor3 T = taylor(a, b);
        const int m = p.m, n = p.n;
        j.value = T.f;
        for (int i = 0; i < m; ++i) j.grad[i] = 2.0 * p.x(i) * T.fa;
        for (int k = 0; k < n; ++k) j.grad[m + k] = 2.0 * p.y(k) * T.fb;
        bool finite = std::isfinite(T.f) && std::isfinite(T.fa) && std::isfinite(T.fb);
        if (order >= 2) {
            j.has_hess = true;
            for (int i = 0; i < m; ++i)
                for (int k = 0; k < m; ++k)
                    j.h(i, k) = (i == k ? 2.0 * T.fa : 0.0) + 4.0 * p.x(i) * p.x(k) * T.faa;
            for (int i = 0; i < m; ++i)
                for (int k = 0; k < n; ++k) {
                    const double v = 4.0 * p.x(i) * p.y(k) * T.fab;
                    j.h(i, m + k) = v;
                    j.h(m + k, i) = v;
                }
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k)
                    j.h(m + i, m + k) =
                        (i == k ? 2.0 * T.fb : 0.0) + 4.0 * p.y(i) * p.y(k) * T.fbb;
            finite = finite && std::isfinite(T.faa) && std::isfinite(T.fab) &&
                     std::isfinite(T.fbb);
        }
        if (order >= 3) {
            j.has_third = true;
            // Lap_x f = 2m F_a + 4a F_aa, Lap_y f = 2n F_b + 4b F_bb as
            // functions of (a, b); differentiate once more.
            const double pa = (2.0 * m + 4.0) * T.faa + 4.0 * a * T.faaa;
            const double pb = 2.0 * m * T.fab + 4.0 * a * T.faab;
            const double ra = 2.0 * n * T.fab + 4.0 * b * T.fabb;
            const double rb = (2.0 * n + 4.0) * T.fbb + 4.0 * b * T.fbbb;
            for (int i = 0; i < m; ++i) {
                j.glx[i] = 2.0 * p.x(i) * pa;
                j.gly[i] = 2.0 * p.x(i) * ra;
            }
            for (int k = 0; k < n; ++k) {
                j.glx[m + k] = 2.0 * p.y(k) * pb;
                j.gly[m + k] = 2.0 * p.y(k) * rb;
            }
            finite = finite && std::isfinite(pa) && std::isfinite(pb) &&
                     std::isfinite(ra) && std::isfinite(rb);
        }
        if (!finite)
            throw DegeneratePoint("field '" + info_.name +
                                  "': jet undefined at this point");
        return j;
    }

protected:
    virtual double value_ab(double a, double b) const = 0;
    virtual Taylor3 taylor(double a, double b) const = 0;
};

// Gauge power rho^beta = G^{beta/(2(alpha+1))}, G = a^{alpha+1} + (alpha+1)^2 b.
class RhoPowerField final : public BiradialField {
public:
    RhoPowerField(double beta, const SpaceParams& sp) : beta_(beta), sp_(sp) {
        info_.name = "rho^" + format_double(beta);
        info_.biradial = true;
        info_.homogeneity = beta;
        info_.has_closed_laplacian = true;
    }

    double closed_laplacian(const Point& p) const override {
        if (beta_ == 0.0) return 0.0;
        const double rho = gauge(p, sp_);
        const double ps = psi(p, sp_);  // throws DegeneratePoint at origin
        const double Q = sp_.Q();
        return beta_ * (beta_ + Q - 2.0) * std::pow(rho, beta_ - 2.0) * ps;
    }

private:
    double value_ab(double a, double b) const override {
        const double ap1 = sp_.alpha + 1.0;
        const double G = std::pow(a, ap1) + ap1 * ap1 * b;
        if (G == 0.0 && beta_ < 0.0) return std::numeric_limits<double>::infinity();
        return std::pow(G, beta_ / (2.0 * ap1));
    }
    Taylor3 taylor(double a, double b) const override {
        const double ap1 = sp_.alpha + 1.0;
        const Taylor3 G =
            Taylor3::var_a(a).pow(ap1) + (ap1 * ap1) * Taylor3::var_b(b);
        return G.pow(beta_ / (2.0 * ap1));
    }

    double beta_;
    SpaceParams sp_;
};

class PowerSumField final : public BiradialField {
public:
    PowerSumField(std::vector<PowerTerm> terms, const SpaceParams& sp,
                  const std::string& name)
        : terms_(std::move(terms)), sp_(sp) {
        for (const auto& t : terms_)
            if (t.p < 0.0 || t.q < 0.0)
                throw InputError("biradial_polynomial: exponents must be >= 0");
        info_.name = name;
        info_.biradial = true;
        info_.has_closed_laplacian = true;
        // Homogeneity if all terms share one dilation degree.
        if (!terms_.empty()) {
            const double deg0 = degree(terms_.front());
            bool homo = true;
            for (const auto& t : terms_)
                if (std::abs(degree(t) - deg0) > 1e-12) homo = false;
            if (homo) info_.homogeneity = deg0;
        }
        lap_ = power_laplacian(terms_, sp_);
    }

    double closed_laplacian(const Point& p) const override {
        return eval_power_terms(lap_, p.x_norm2(), p.y_norm2());
    }

private:
    double degree(const PowerTerm& t) const {
        return 2.0 * t.p + 2.0 * (sp_.alpha + 1.0) * t.q;
    }
    double value_ab(double a, double b) const override {
        return eval_power_terms(terms_, a, b);
    }
    Taylor3 taylor(double a, double b) const override {
        Taylor3 r;
        const Taylor3 va = Taylor3::var_a(a), vb = Taylor3::var_b(b);
        for (const auto& t : terms_) {
            if (t.coeff == 0.0) continue;
            Taylor3 term = Taylor3::constant(t.coeff);
            if (t.p != 0.0) term = term * va.pow(t.p);
            if (t.q != 0.0) term = term * vb.pow(t.q);
            r = r + term;
        }
        return r;
    }

    std::vector<PowerTerm> terms_;
    SpaceParams sp_;
    std::vector<PowerTerm> lap_;
};

class BumpField final : public BiradialField {
public:
    BumpField(double r, const SpaceParams& sp) : r_(r), sp_(sp) {
        if (!(r > 0.0)) throw InputError("bump: r must be positive");
        info_.name = "bump(" + format_double(r) + ")";
        info_.biradial = true;
    }

private:
    double value_ab(double a, double b) const override {
        const double ap1 = sp_.alpha + 1.0;
        const double R = std::pow(r_, 2.0 * ap1);
        const double G = std::pow(a, ap1) + ap1 * ap1 * b;
        const double v = 1.0 - G / R;
        return v <= 0.0 ? 0.0 : v * v * v;
    }
    Taylor3 taylor(double a, double b) const override {
        const double ap1 = sp_.alpha + 1.0;
        const double R = std::pow(r_, 2.0 * ap1);
        const Taylor3 G =
            Taylor3::var_a(a).pow(ap1) + (ap1 * ap1) * Taylor3::var_b(b);
        return (1.0 - G * (1.0 / R)).clamped_cube();
    }

    double r_;
    SpaceParams sp_;
};

class ConstantField final : public AnalyticField {
public:
    ConstantField(double c, const SpaceParams&) : c_(c) {
        info_.name = "const(" + format_double(c) + ")";
        info_.biradial = true;
        info_.has_closed_laplacian = true;
        info_.homogeneity = 0.0;
    }
    Jet jet(const Point& p, int order) const override {
        Jet j;
        j.dim = p.dim();
        j.value = c_;
        j.has_hess = order >= 2;
        j.has_third = order >= 3;
        return j;
    }
    double closed_laplacian(const Point&) const override { return 0.0; }

private:
    double c_;
};

class CoordinateField final : public AnalyticField {
public:
    CoordinateField(int i, const SpaceParams& sp) : i_(i) {
        if (i < 0 || i >= sp.m)
            throw InputError("coordinate_field: index must address the x-block");
        info_.name = "x_" + std::to_string(i + 1);
        info_.biradial = false;
        info_.homogeneity = 1.0;
        info_.has_closed_laplacian = true;
    }
    Jet jet(const Point& p, int order) const override {
        Jet j;
        j.dim = p.dim();
        j.value = p.x(i_);
        j.grad[i_] = 1.0;
        j.has_hess = order >= 2;
        j.has_third = order >= 3;
        return j;
    }
    double closed_laplacian(const Point&) const override { return 0.0; }

private:
    int i_;
};

class MixedProbeField final : public AnalyticField {
public:
    explicit MixedProbeField(const SpaceParams& sp) : m_(sp.m), alpha_(sp.alpha) {
        info_.name = "mixed_probe";
        info_.biradial = false;
        info_.has_closed_laplacian = true;
    }
    Jet jet(const Point& p, int order) const override {
        Jet j;
        j.dim = p.dim();
        const double x1 = p.x(0), y1 = p.y(0);
        const double x2 = m_ > 1 ? p.x(1) : 0.0;
        j.value = x1 * y1 + 0.5 * x1 * x1 + 0.25 * x1 * x2 + y1 * y1;
        j.grad[0] = y1 + x1 + 0.25 * x2;
        if (m_ > 1) j.grad[1] = 0.25 * x1;
        j.grad[m_] = x1 + 2.0 * y1;
        if (order >= 2) {
            j.has_hess = true;
            j.h(0, 0) = 1.0;
            if (m_ > 1) {
                j.h(0, 1) = 0.25;
                j.h(1, 0) = 0.25;
            }
            j.h(0, m_) = 1.0;
            j.h(m_, 0) = 1.0;
            j.h(m_, m_) = 2.0;
        }
        j.has_third = order >= 3;  // all third derivatives vanish
        return j;
    }
    double closed_laplacian(const Point& p) const override {
        return 1.0 + 2.0 * std::pow(p.x_norm2(), alpha_);
    }

private:
    int m_;
    double alpha_;
};

class DilatedField final : public AnalyticField {
public:
    DilatedField(FieldPtr f, double lambda, const SpaceParams& sp)
        : f_(std::move(f)), lam_(lambda), sp_(sp) {
        if (!(lambda > 0.0)) throw InputError("dilated: lambda must be positive");
        info_ = f_->info();
        info_.name = info_.name + "@dilate(" + format_double(lambda) + ")";
    }
    Jet jet(const Point& p, int order) const override {
        const Point q = dilate(p, lam_, sp_);
        Jet j = f_->jet(q, order);
        const int m = sp_.m, n = sp_.n;
        const double lx = lam_, ly = std::pow(lam_, sp_.alpha + 1.0);
        for (int i = 0; i < m; ++i) j.grad[i] *= lx;
        for (int k = 0; k < n; ++k) j.grad[m + k] *= ly;
        if (j.has_hess) {
            for (int i = 0; i < m + n; ++i)
                for (int k = 0; k < m + n; ++k)
                    j.h(i, k) *= (i < m ? lx : ly) * (k < m ? lx : ly);
        }
        if (j.has_third) {
            for (int i = 0; i < m + n; ++i) {
                const double li = (i < m) ? lx : ly;
                j.glx[i] *= lx * lx * li;
                j.gly[i] *= ly * ly * li;
            }
        }
        return j;
    }
    double closed_laplacian(const Point& p) const override {
        return lam_ * lam_ * f_->closed_laplacian(dilate(p, lam_, sp_));
    }

private:
    FieldPtr f_;
    double lam_;
    SpaceParams sp_;
};

class ScaledField final : public AnalyticField {
public:
    ScaledField(FieldPtr f, double c) : f_(std::move(f)), c_(c) {
        info_ = f_->info();
        info_.name = format_double(c) + "*" + info_.name;
    }
    Jet jet(const Point& p, int order) const override {
        Jet j = f_->jet(p, order);
        j.value *= c_;
        for (auto& g : j.grad) g *= c_;
        for (auto& h : j.hess) h *= c_;
        for (auto& g : j.glx) g *= c_;
        for (auto& g : j.gly) g *= c_;
        return j;
    }
    double closed_laplacian(const Point& p) const override {
        return c_ * f_->closed_laplacian(p);
    }

private:
    FieldPtr f_;
    double c_;
};

class LaplacianField final : public AnalyticField {
public:
    LaplacianField(FieldPtr u, const SpaceParams& sp) : u_(std::move(u)), sp_(sp) {
        info_.name = "lap(" + u_->info().name + ")";
        info_.biradial = u_->info().biradial;
        if (u_->info().homogeneity)
            info_.homogeneity = *u_->info().homogeneity - 2.0;
        info_.max_jet_order = 1;
    }
    Jet jet(const Point& p, int order) const override {
        if (order > 1)
            throw InputError("laplacian_field: only jet orders 0 and 1 available");
        Jet j;
        j.dim = p.dim();
        if (order == 0) {
            j.value = laplace_x(u_->jet(p, 2), p, sp_);
            return j;
        }
        const Jet ju = u_->jet(p, 3);
        j.value = laplace_x(ju, p, sp_);
        euclidean_grad_laplace_x(ju, p, sp_, j.grad);
        return j;
    }

private:
    FieldPtr u_;
    SpaceParams sp_;
};

} // namespace

std::vector<PowerTerm> power_laplacian(const std::vector<PowerTerm>& terms,
                                       const SpaceParams& sp) {
    std::vector<PowerTerm> out;
    for (const auto& t : terms) {
        const double cx = t.coeff * 2.0 * t.p * (sp.m + 2.0 * (t.p - 1.0));
        if (cx != 0.0) out.push_back({cx, t.p - 1.0, t.q});
        const double cy = t.coeff * 2.0 * t.q * (sp.n + 2.0 * (t.q - 1.0));
        if (cy != 0.0) out.push_back({cy, t.p + sp.alpha, t.q - 1.0});
    }
    return out;
}

double eval_power_terms(const std::vector<PowerTerm>& terms, double a, double b) {
    double s = 0.0;
    for (const auto& t : terms) {
        double v = t.coeff;
        if (t.p != 0.0) v *= std::pow(a, t.p);
        if (t.q != 0.0) v *= std::pow(b, t.q);
        s += v;
    }
    return s;
}

FieldPtr rho_power(double beta, const SpaceParams& sp) {
    return std::make_shared<RhoPowerField>(beta, sp);
}

FieldPtr coordinate_field(int i, const SpaceParams& sp) {
    return std::make_shared<CoordinateField>(i, sp);
}

FieldPtr biradial_polynomial(std::vector<PowerTerm> terms, const SpaceParams& sp) {
    std::ostringstream name;
    name << "poly[";
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i) name << "+";
        name << format_double(terms[i].coeff) << "*a^" << format_double(terms[i].p)
             << "b^" << format_double(terms[i].q);
    }
    name << "]";
    return std::make_shared<PowerSumField>(std::move(terms), sp, name.str());
}

FieldPtr bump(double r, const SpaceParams& sp) {
    return std::make_shared<BumpField>(r, sp);
}

FieldPtr constant_field(double c, const SpaceParams& sp) {
    return std::make_shared<ConstantField>(c, sp);
}

FieldPtr mixed_probe(const SpaceParams& sp) {
    return std::make_shared<MixedProbeField>(sp);
}

FieldPtr dilated(FieldPtr f, double lambda, const SpaceParams& sp) {
    return std::make_shared<DilatedField>(std::move(f), lambda, sp);
}

FieldPtr scaled(FieldPtr f, double c) {
    return std::make_shared<ScaledField>(std::move(f), c);
}

FieldPtr laplacian_field(FieldPtr u, const SpaceParams& sp) {
    return std::make_shared<LaplacianField>(std::move(u), sp);
}

// ---------------------------------------------------------------------------
// Grid fields
// ---------------------------------------------------------------------------

GridField::GridField(GridSpec spec, std::vector<double> values)
    : spec_(spec), v_(std::move(values)) {
    spec_.validate();
    if (v_.size() != static_cast<std::size_t>(spec_.ns) * spec_.nt)
        throw InputError("GridField: value count does not match grid");
    for (double x : v_)
        if (!std::isfinite(x)) throw InputError("GridField: non-finite value");
}

GridField sample_to_grid(const AnalyticField& f, const GridSpec& spec) {
    spec.validate();
    if (!f.info().biradial)
        throw NonBiradial("sample_to_grid: field '" + f.info().name +
                          "' is not bi-radial");
    SpaceParams sp(1, 1, 1.0);  // representative embedding only needs two slots
    std::vector<double> v(static_cast<std::size_t>(spec.ns) * spec.nt);
    for (int i = 0; i < spec.ns; ++i)
        for (int j = 0; j < spec.nt; ++j) {
            const Point p = Point::representative(i * spec.hs(), j * spec.ht(), sp);
            v[static_cast<std::size_t>(i) * spec.nt + j] = f.value(p);
        }
    return GridField(spec, std::move(v));
}

void GridField::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("GridField::write_csv: cannot open " + path);
    out << "s-grid";
    for (int i = 0; i < spec_.ns; ++i) out << "," << format_double(i * spec_.hs());
    out << "\r\n";
    out << "t-grid";
    for (int j = 0; j < spec_.nt; ++j) out << "," << format_double(j * spec_.ht());
    out << "\r\n";
    for (int i = 0; i < spec_.ns; ++i) {
        for (int j = 0; j < spec_.nt; ++j) {
            if (j) out << ",";
            out << format_double(at(i, j));
        }
        out << "\r\n";
    }
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}
} // namespace

GridField GridField::read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("GridField::read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("GridField::read_csv: empty file");
    auto srow = split_csv_line(line);
    if (srow.empty() || srow[0] != "s-grid")
        throw InputError("GridField::read_csv: missing s-grid header");
    if (!std::getline(in, line)) throw InputError("GridField::read_csv: truncated");
    auto trow = split_csv_line(line);
    if (trow.empty() || trow[0] != "t-grid")
        throw InputError("GridField::read_csv: missing t-grid header");

    GridSpec spec;
    spec.ns = static_cast<int>(srow.size()) - 1;
    spec.nt = static_cast<int>(trow.size()) - 1;
    if (spec.ns < 2 || spec.nt < 2)
        throw InputError("GridField::read_csv: degenerate grid");
    spec.S = std::stod(srow.back());
    spec.T = std::stod(trow.back());

    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(spec.ns) * spec.nt);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        for (const auto& cell : split_csv_line(line)) v.push_back(std::stod(cell));
    }
    return GridField(spec, std::move(v));
}

// ---------------------------------------------------------------------------
// Cutoff
// ---------------------------------------------------------------------------

double Cutoff::value(double rho) const {
    if (rho <= r) return 1.0;
    if (rho >= 2.0 * r) return 0.0;
    const double x = (rho - r) / r;
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double Cutoff::d1(double rho) const {
    if (rho <= r || rho >= 2.0 * r) return 0.0;
    const double x = (rho - r) / r;
    return -30.0 * x * x * (1.0 - x) * (1.0 - x) / r;
}

double Cutoff::d2(double rho) const {
    if (rho <= r || rho >= 2.0 * r) return 0.0;
    const double x = (rho - r) / r;
    return -(60.0 * x - 180.0 * x * x + 120.0 * x * x * x) / (r * r);
}

CutoffConstants cutoff_constants(const Cutoff& eta) {
    CutoffConstants c;
    const int n = 4096;
    for (int i = 0; i <= n; ++i) {
        const double rho = eta.r * (1.0 + static_cast<double>(i) / n);
        c.c1 = std::max(c.c1, eta.r * std::abs(eta.d1(rho)));
        c.c2 = std::max(c.c2, eta.r * eta.r * std::abs(eta.d2(rho)));
    }
    return c;
}

} // namespace grushin
