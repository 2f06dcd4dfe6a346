#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "grushin/fields.hpp"
#include "grushin/types.hpp"

namespace grushin {

enum class QuadMethod { reduced2d, qmc };

/// Declared singular behavior of an integrand near the origin / the axis
/// {x = 0}: integrand = (bounded) * rho^{rho_exp} * |x|^{x_exp}.
struct WeightSpec {
    double rho_exp = 0.0;
    double x_exp = 0.0;
};

struct QuadratureOptions {
    QuadMethod method = QuadMethod::reduced2d;
    double rel_tol = 1e-8;       // reduced2d refinement target
    int gauss_order = 12;        // Gauss-Legendre order per panel
    int min_depth = 3;           // dyadic grading depth at smooth interval ends
    int max_level = 3;           // panel count doubles per level
    std::vector<double> radial_breaks;  // extra panel edges (cutoff kinks)

    std::uint64_t qmc_seed = 20240901;
    std::size_t qmc_points = std::size_t{1} << 20;
    int qmc_replicates = 8;
    double qmc_shell_step = 0.02;  // h = r * max(shell_step, 1e-3)

    int threads = 1;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;  // two-level difference (reduced2d) or replicate spread (qmc)
    std::size_t nodes = 0;
    QuadMethod method = QuadMethod::reduced2d;
};

/// The bi-radial polar chart (rho, theta) -> (s, t) covering each gauge
/// sphere, with the volume density realizing  integral_{B_r} f dx dy  =
/// integral_0^r integral_0^{pi/2} f(s, t) J(rho, theta) dtheta drho.
struct PolarChart {
    SpaceParams sp;

    explicit PolarChart(const SpaceParams& sp_) : sp(sp_) {}

    double s(double rho, double theta) const;
    double t(double rho, double theta) const;
    /// J(rho, theta) = sigma_m sigma_n rho^{Q-1} sin^{(m-1-alpha)/(alpha+1)}
    ///                 cos^{n-1} / (alpha+1)^n.
    double density(double rho, double theta) const;
};

/// One derived integrand in a shared-node batch. fn receives the jets of the
/// batch fields (in order) at the node.
struct BatchIntegrand {
    WeightSpec weight{};
    std::function<double(std::span<const Jet>, const Point&)> fn;
};

/// Integrals over the gauge ball B_r. Batch items share quadrature nodes and
/// one jet evaluation per field per node.
std::vector<QuadratureResult> ball_batch(std::span<const FieldPtr> fields,
                                         std::span<const int> jet_orders,
                                         std::span<const BatchIntegrand> items,
                                         double r, const SpaceParams& sp,
                                         const QuadratureOptions& opt);

/// Integrals over the gauge sphere with the co-area measure
/// d sigma / |grad rho|.
std::vector<QuadratureResult> sphere_batch(std::span<const FieldPtr> fields,
                                           std::span<const int> jet_orders,
                                           std::span<const BatchIntegrand> items,
                                           double r, const SpaceParams& sp,
                                           const QuadratureOptions& opt);

/// Scalar convenience wrappers.
QuadratureResult ball_integral(const std::function<double(const Point&)>& f,
                               bool biradial, WeightSpec w, double r,
                               const SpaceParams& sp, const QuadratureOptions& opt);
QuadratureResult sphere_integral(const std::function<double(const Point&)>& f,
                                 bool biradial, WeightSpec w, double r,
                                 const SpaceParams& sp, const QuadratureOptions& opt);

/// Integral of the field itself (weight taken as regular).
QuadratureResult ball_integral(const AnalyticField& f, double r,
                               const SpaceParams& sp, const QuadratureOptions& opt);
QuadratureResult sphere_integral(const AnalyticField& f, double r,
                                 const SpaceParams& sp, const QuadratureOptions& opt);

} // namespace grushin
