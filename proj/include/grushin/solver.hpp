#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <string>

#include "grushin/fields.hpp"
#include "grushin/frequency.hpp"

namespace grushin {

/// Finite-difference realization of the bi-radial reduction
///   L[u] = u_ss + ((m-1)/s) u_s + s^{2a} (u_tt + ((n-1)/t) u_t)
/// on a uniform (s, t) grid, L'Hopital limits on the axes (m u_ss at s = 0,
/// n s^{2a} u_tt at t = 0), Dirichlet rows eliminated on the outer edges.
struct BiradialOperator {
    GridSpec grid;
    SpaceParams sp{5, 1, 1.0};
    Eigen::SparseMatrix<double> A;  // active x active
    Eigen::SparseMatrix<double> B;  // active x boundary

    int nact_s() const { return grid.ns - 1; }
    int nact_t() const { return grid.nt - 1; }
    int active_count() const { return nact_s() * nact_t(); }
    int boundary_count() const { return grid.nt + grid.ns - 1; }
    int aidx(int i, int j) const { return i * nact_t() + j; }
    /// Boundary enumeration: the edge i = ns-1 first (all j), then j = nt-1
    /// (i < ns-1).
    int bidx(int i, int j) const {
        return i == grid.ns - 1 ? j : grid.nt + i;
    }
};

BiradialOperator assemble(const GridSpec& grid, const SpaceParams& sp);

/// Apply the assembled stencil to a full grid function (Dirichlet values
/// taken from the grid itself); rows on the outer edges are left zero.
GridField apply_operator(const BiradialOperator& op, const GridField& u);

/// Inner Dirichlet mask replacing nodes with rho <= rho_min.
struct Excision {
    double rho_min = 0.0;
    double u_inner = 0.0;
    double w_inner = 0.0;
};

struct BVPSpec {
    GridSpec grid;
    std::function<double(double s, double t)> u_boundary;  // outer edges
    std::function<double(double s, double t)> w_boundary;
    Potential V;
    std::function<double(double s, double t)> source;  // manufactured F, optional
    std::optional<Excision> excision;
};

enum class SolveMethod { sparse_lu, bicgstab };

struct SolverOptions {
    SolveMethod method = SolveMethod::sparse_lu;
    double residual_target = 1e-10;
    int max_iterations = 4000;
};

struct SolveReport {
    double residual = 0.0;  // relative algebraic residual of the block system
    int iterations = 0;     // 0 for the direct factorization
    std::string method;
};

struct Solution {
    GridField u;
    GridField w;
    SolveReport report;
};

/// Solve the coupled system L u = w, L w = V u + F monolithically.
/// Throws SolveFailure if the residual target is not met, SingularSystem if
/// the factorization fails.
Solution solve(const BVPSpec& spec, const BiradialOperator& op,
               const SolverOptions& opt);

/// Ambient evaluator over a grid field: cubic Lagrange interpolation in
/// (s, t) with even reflection at the axes; jets up to order 2 by
/// differentiating the interpolant. Queries beyond the rectangle throw
/// OutOfDomain.
FieldPtr lift_to_ambient(const GridField& g, const SpaceParams& sp);

/// Manufactured-solution convergence study on a sequence of square grids.
struct MmsResult {
    std::vector<int> grids;
    std::vector<double> h, l2, linf;
    double order_l2 = 0.0;
    double order_linf = 0.0;
    double worst_residual = 0.0;
};

MmsResult mms_study(const SpaceParams& sp, std::span<const int> grids, double S,
                    double T, double c0, double eps, const SolverOptions& opt);

/// The manufactured pair used by the study (exact on-grid values).
std::vector<PowerTerm> mms_exact_u();

} // namespace grushin
