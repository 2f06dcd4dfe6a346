#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grushin/taylor3.hpp"
#include "grushin/types.hpp"

namespace grushin {

struct FieldInfo {
    std::string name;
    bool biradial = false;
    std::optional<double> homogeneity;  // degree under the anisotropic dilations
    bool has_closed_laplacian = false;
    int max_jet_order = 3;
};

/// An evaluatable scalar field with exact derivative data at a point.
class AnalyticField {
public:
    virtual ~AnalyticField() = default;

    const FieldInfo& info() const { return info_; }

    /// order: 0 value, 1 gradient, 2 Hessian, 3 adds glx/gly.
    virtual Jet jet(const Point& p, int order) const = 0;

    double value(const Point& p) const { return jet(p, 0).value; }

    /// Hand-tabulated sub-Laplacian, when the family declares one.
    virtual double closed_laplacian(const Point& p) const;

protected:
    FieldInfo info_;
};

using FieldPtr = std::shared_ptr<const AnalyticField>;

/// One term c * (|x|^2)^p * (|y|^2)^q, real exponents p, q >= 0.
struct PowerTerm {
    double coeff = 0.0;
    double p = 0.0;
    double q = 0.0;
};

/// Sub-Laplacian of a power sum, again a power sum:
///   Delta_x a^p b^q       = 2p(m + 2(p-1)) a^{p-1} b^q
///   |x|^{2a} Delta_y ...  = 2q(n + 2(q-1)) a^{p+alpha} b^{q-1}
std::vector<PowerTerm> power_laplacian(const std::vector<PowerTerm>& terms,
                                       const SpaceParams& sp);

double eval_power_terms(const std::vector<PowerTerm>& terms, double a, double b);

// ---- catalog -------------------------------------------------------------

/// rho^beta with declared Delta_X = beta(beta + Q - 2) rho^{beta-2} psi and
/// homogeneity degree beta. Jets throw DegeneratePoint at the origin when
/// the power is not smooth there.
FieldPtr rho_power(double beta, const SpaceParams& sp);

/// f = x_i (0-based, i < m): harmonic, homogeneous of degree 1. Not
/// bi-radial; quadrature must take the QMC path.
FieldPtr coordinate_field(int i, const SpaceParams& sp);

/// Sum of monomials (s^2)^p (t^2)^q with real exponents p, q >= 0; jets are
/// exact (symbolic monomial table).
FieldPtr biradial_polynomial(std::vector<PowerTerm> terms, const SpaceParams& sp);

/// Compactly supported probe u = (max(0, 1 - (rho/r)^{2(a+1)}))^3; u and
/// grad_X u vanish on the gauge sphere of radius r.
FieldPtr bump(double r, const SpaceParams& sp);

FieldPtr constant_field(double c, const SpaceParams& sp);

/// Smooth non-bi-radial probe mixing blocks (for commutator checks):
/// f = x_1 y_1 + 0.5 x_1^2 + 0.25 x_1 x_min(2,m) + y_1^2.
FieldPtr mixed_probe(const SpaceParams& sp);

/// u composed with the dilation delta_lambda, with jets transformed by the
/// chain rule. Homogeneity metadata is preserved.
FieldPtr dilated(FieldPtr f, double lambda, const SpaceParams& sp);

/// c * f.
FieldPtr scaled(FieldPtr f, double c);

/// The sub-Laplacian of u as a field of its own (derived from order-3 jets
/// of u; supports jet order <= 1).
FieldPtr laplacian_field(FieldPtr u, const SpaceParams& sp);

// ---- grid fields -----------------------------------------------------------

struct GridSpec {
    int ns = 0, nt = 0;   // node counts including both ends
    double S = 0, T = 0;  // s in [0, S], t in [0, T]
    double hs() const { return S / (ns - 1); }
    double ht() const { return T / (nt - 1); }
    void validate() const;
};

/// Discrete bi-radial field on the (s, t) rectangle; even in s at s = 0 and
/// in t at t = 0. Immutable after construction in library use.
class GridField {
public:
    GridField() = default;
    GridField(GridSpec spec, std::vector<double> values);

    const GridSpec& spec() const { return spec_; }
    double at(int i, int j) const { return v_[i * spec_.nt + j]; }
    double& at(int i, int j) { return v_[i * spec_.nt + j]; }
    const std::vector<double>& values() const { return v_; }

    void write_csv(const std::string& path) const;
    static GridField read_csv(const std::string& path);

private:
    GridSpec spec_;
    std::vector<double> v_;
};

/// Pointwise samples of a bi-radial field. Throws NonBiradial if the field
/// is not flagged bi-radial, InputError on a degenerate grid spec.
GridField sample_to_grid(const AnalyticField& f, const GridSpec& spec);

// ---- cutoff ---------------------------------------------------------------

/// Radial cutoff: 1 on [0, r], 0 on [2r, inf), quintic smoothstep between.
struct Cutoff {
    double r = 1.0;

    explicit Cutoff(double r_) : r(r_) {
        if (!(r > 0.0)) throw InputError("Cutoff: r must be positive");
    }
    double value(double rho) const;
    double d1(double rho) const;
    double d2(double rho) const;
};

/// Numerically computed sup of r|eta'| and r^2|eta''| over the transition
/// band.
struct CutoffConstants {
    double c1 = 0.0;
    double c2 = 0.0;
};
CutoffConstants cutoff_constants(const Cutoff& eta);

} // namespace grushin
