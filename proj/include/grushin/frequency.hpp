#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grushin/fields.hpp"
#include "grushin/quadrature.hpp"

namespace grushin {

/// Potential V, evaluatable away from the origin, with declared singular
/// behavior for quadrature grading.
struct Potential {
    std::function<double(const Point&)> fn;  // empty => V == 0
    WeightSpec weight{};
    double c0 = 0.0;
    double epsilon = 0.0;
    std::string name = "none";

    bool is_zero() const { return !fn; }
    double operator()(const Point& p) const { return fn ? fn(p) : 0.0; }

    static Potential zero();
    /// c0 / rho^4 (singular at the origin).
    static Potential gauge_inverse4(double c0, const SpaceParams& sp);
    /// c0 / rho_eps^4 with rho_eps = (rho^{2(a+1)} + eps^{2(a+1)})^{1/(2(a+1))}.
    static Potential gauge_inverse4_reg(double c0, double eps, const SpaceParams& sp);
};

/// The smallness conditions on c0 evaluated from their closed forms.
struct SmallnessVerdict {
    double c0 = 0.0;
    int m = 0;
    double Q = 0.0;
    bool cond_1 = false;  // 4 c0 / ((m-2)^2 (Q-6)) + 4/(m-2)^4 < 1
    bool cond_2 = false;  // 4 (c0+1) / ((m-2)^2 (Q-6)) < 1
    bool cond_0 = false;  // 4 c0 / ((m-2)^2 (Q-6)) < 1
    double margin_1 = 0.0, margin_2 = 0.0, margin_0 = 0.0;  // 1 - LHS
    bool admissible() const { return cond_1 || cond_2; }
};

SmallnessVerdict smallness_check(double c0, const SpaceParams& sp);

struct ProfileEntry {
    double r = 0.0;
    double H1 = 0.0, H2 = 0.0, H = 0.0;
    double I1 = 0.0, I1b = 0.0, I2 = 0.0, I2b = 0.0, I = 0.0;
    double N = 0.0;
    double Mu = 0.0;   // int_{B_r} u^2 psi
    double Muw = 0.0;  // int_{B_r} (u^2 + w^2) psi
    double eH1 = 0.0, eH2 = 0.0, eI1 = 0.0, eI1b = 0.0, eI2 = 0.0, eI2b = 0.0;
    double eH = 0.0, eI = 0.0, eN = 0.0, eMu = 0.0, eMuw = 0.0;
};

struct FrequencyProfile {
    SpaceParams sp{5, 1, 1.0};
    std::vector<ProfileEntry> entries;
    bool truncated = false;     // H lost its 3-sigma positivity margin
    double truncated_at = 0.0;  // first offending radius
};

/// All §4 quantities over a radius grid. w is the sub-Laplacian of u: pass
/// it explicitly (solver output) or pass nullptr to derive it from order-3
/// jets of u. Entries at radii past a positivity loss of H are dropped and
/// the profile is flagged.
FrequencyProfile compute_profile(const FieldPtr& u, const FieldPtr& w,
                                 const Potential& V, const SpaceParams& sp,
                                 std::span<const double> radii,
                                 const QuadratureOptions& opt);

/// Exactly log-uniform grid from rmin to rmax.
std::vector<double> log_radius_grid(double rmin, double rmax, int per_decade);

/// Residuals of H'(r) = (Q-1) H/r + 2 I + 4 r^3 H2, with H' from five-point
/// central differences in log r.
struct HDerivativeCheck {
    std::vector<double> r;
    std::vector<double> residual;  // relative
    double max_residual = 0.0;
};
HDerivativeCheck check_H_derivative(const FrequencyProfile& p);

struct MonotonicityResult {
    double r0 = 0.0;
    double n_r0 = 0.0;
    std::vector<int> omega;  // indices with N > max(1, N(r0))
    bool omega_empty = true;
    double beta_hat = 0.0;   // max(0, sup over Omega of -r (log N)')
    double violation_measure = 0.0;
};
MonotonicityResult check_monotonicity(const FrequencyProfile& p, double r0);

struct DoublingResult {
    std::vector<double> r;  // radii with 2r inside the grid
    std::vector<double> D;  // mass ratios Muw(2r)/Muw(r)
    double max_D = 0.0;
    double gamma_hat = 0.0;
    bool gamma_from_beta = false;  // false => beta <= 2, fallback exponent
    double A_hat = 0.0;            // sup-construction for the H-level form
    double C_hat = 0.0, A_fit = 0.0;  // fit log D = log C + A r^{-gamma}
    bool h_form_holds = false;
};
DoublingResult check_doubling(const FrequencyProfile& p, double beta_hat);

struct CaccioppoliResult {
    double lhs = 0.0;             // int_{B_r} (Lap_X u)^2
    double potential_term = 0.0;  // 2 int_{B_2r} V u^2 eta^4
    double mass = 0.0;            // int_{B_2r} u^2
    double empirical_c = 0.0;     // max(0, lhs - potential_term) r^4 / mass
};
CaccioppoliResult check_caccioppoli(const FieldPtr& u, const FieldPtr& w,
                                    const Potential& V, double r,
                                    const SpaceParams& sp,
                                    const QuadratureOptions& opt);

enum class VanishingClass { FINITE_ORDER, SUPER_POLYNOMIAL };

std::string to_string(VanishingClass c);

struct VanishingFit {
    double k_hat = 0.0;      // global log-log slope
    double B_hat = 0.0;      // exp(-B r^{-gamma}) amplitude
    double gamma_hat = 0.0;  // exponential rate
    double slope_growth = 0.0;
    VanishingClass cls = VanishingClass::FINITE_ORDER;
};

/// Fit ball masses M(r) on a decreasing radius grid. Throws
/// InsufficientRange with fewer than 5 usable samples.
VanishingFit vanishing_order_fit(std::span<const double> r, std::span<const double> M);

/// CSV with one row per radius (all profile columns).
void write_profile_csv(const std::string& path, const FrequencyProfile& p);

} // namespace grushin
