#pragma once

#include <array>
#include <functional>

#include "grushin/types.hpp"

namespace grushin {

class AnalyticField;

/// Gauge norm rho(x, y) = (|x|^{2(a+1)} + (a+1)^2 |y|^2)^{1/(2(a+1))}.
/// Exact on the coordinate blocks: rho = |x| when y = 0 and
/// rho = ((a+1)|y|)^{1/(a+1)} when x = 0.
double gauge(const Point& p, const SpaceParams& sp);

/// Angle function psi = |x|^{2a} / rho^{2a} in [0, 1].
/// Throws DegeneratePoint at the origin (the limit is directional).
double psi(const Point& p, const SpaceParams& sp);

/// Anisotropic dilation (x, y) -> (lambda x, lambda^{a+1} y), lambda > 0.
Point dilate(const Point& p, double lambda, const SpaceParams& sp);

/// Closed-form value/gradient/Hessian of rho. Throws DegeneratePoint at the
/// origin. The Hessian is singular on {x = 0}; entries are still returned
/// (callers sample off-axis).
Jet gauge_jet(const Point& p, const SpaceParams& sp);

/// Euclidean |grad rho|.
double gauge_grad_norm(const Point& p, const SpaceParams& sp);

/// Components of the horizontal gradient
/// (d_{x_1} f, ..., d_{x_m} f, |x|^a d_{y_1} f, ..., |x|^a d_{y_n} f).
void horizontal_gradient(const Jet& j, const Point& p, const SpaceParams& sp,
                         std::array<double, kMaxDim>& out);

double horizontal_gradient_norm2(const Jet& j, const Point& p, const SpaceParams& sp);

/// Sub-Laplacian: Laplacian_x f + |x|^{2a} Laplacian_y f.
double laplace_x(const Jet& j, const Point& p, const SpaceParams& sp);

/// Generator derivative Z f = sum_i x_i d_{x_i} f + (a+1) sum_j y_j d_{y_j} f.
double z_derivative(const Jet& j, const Point& p, const SpaceParams& sp);

/// Euclidean partials of the sub-Laplacian, assembled from third-order jet
/// data. Requires j.has_third.
void euclidean_grad_laplace_x(const Jet& j, const Point& p, const SpaceParams& sp,
                              std::array<double, kMaxDim>& out);

/// Horizontal gradient of the sub-Laplacian (y-components carry the |x|^a
/// factor). Requires j.has_third.
void grad_laplace_x(const Jet& j, const Point& p, const SpaceParams& sp,
                    std::array<double, kMaxDim>& out);

double grad_laplace_x_norm2(const Jet& j, const Point& p, const SpaceParams& sp);

/// Second horizontal derivative X_i X_j f (not symmetrized).
double xx_second(const Jet& j, const Point& p, const SpaceParams& sp, int i, int k);

/// Central finite-difference jet of a callable, step h = eps^{1/3} *
/// max(1, |coordinate|). Orders: 0 value, 1 gradient, 2 Hessian, 3 adds the
/// glx/gly contractions (differences of finite-difference Laplacians).
Jet fd_jet(const std::function<double(const Point&)>& f, const Point& p,
           const SpaceParams& sp, int order);

/// Absolute residuals of the structural identities at one point:
///   lap_rho      Delta_X rho - (Q-1) psi / rho
///   z_rho        Z rho - rho
///   mixed_grad   grad_X f . grad_X rho - (Z f) psi / rho
///   grad_norm    |grad_X rho|^2 - psi
///   commutator   max_i | [X_i, Z] f - X_i f |      (nested differences)
///   z_bound      max(0, |Z f| - rho psi^{-1/2} |grad_X f|)
/// The z_bound slack is only evaluated where psi >= 1e-10.
struct IdentityResiduals {
    double lap_rho = 0.0;
    double z_rho = 0.0;
    double mixed_grad = 0.0;
    double grad_norm = 0.0;
    double commutator = 0.0;
    double z_bound = 0.0;
    double max() const;
};

IdentityResiduals identity_residuals(const Point& p, const SpaceParams& sp,
                                     const AnalyticField& test);

/// Same nested-difference machinery with a caller-chosen expectation for the
/// commutator: expect_xi = true checks [X_i, Z] f against X_i f, false
/// against Z f. Used to pin down which form the identity actually takes.
double commutator_residual(const Point& p, const SpaceParams& sp,
                           const AnalyticField& test, bool expect_xi);

} // namespace grushin
