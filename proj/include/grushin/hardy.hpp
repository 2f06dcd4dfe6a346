#pragma once

#include <string>
#include <vector>

#include "grushin/quadrature.hpp"

namespace grushin {

enum class Verdict { PASS, FAIL, REPORTED };

std::string to_string(Verdict v);

/// Outcome of one inequality instance. slack = RHS - LHS; PASS iff
/// slack >= -error_budget. For the inequalities whose constant is not
/// explicit, empirical_constant = LHS / (sum of unit-coefficient RHS terms)
/// and the verdict is REPORTED.
struct InequalityReport {
    std::string id;
    std::string field;
    int m = 0, n = 0;
    double alpha = 0.0;
    double r = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double empirical_constant = 0.0;
    double error_budget = 0.0;
    Verdict verdict = Verdict::REPORTED;
};

/// int u^2/|x|^2 <= (2/(m-2))^2 int |grad_X u|^2
///                + (2/(m-2)) r^{-1} int_{dB_r} u^2 psi / |grad rho|.
InequalityReport check_hardy_x(const FieldPtr& u, double r, const SpaceParams& sp,
                               const QuadratureOptions& opt);

/// Same right-hand side bounding int u^2/(rho^2 psi); needs alpha <= 1.
InequalityReport check_hardy_psi(const FieldPtr& u, double r, const SpaceParams& sp,
                                 const QuadratureOptions& opt);

/// int psi u^2/rho^6 <= (Q-6)^{-2} int (Lap_X u)^2/(rho^2 psi)
///                    + 2/(Q-6) r^{-5} int_{dB_r} u^2 psi / |grad rho|.
InequalityReport check_rellich_1(const FieldPtr& u, double r, const SpaceParams& sp,
                                 const QuadratureOptions& opt);

/// Gradient form of the Rellich bound (constants 4/((m-2)^2(Q-6)^2),
/// 2/((m-2)(Q-6)^2), 2/(Q-6)).
InequalityReport check_rellich_2(const FieldPtr& u, double r, const SpaceParams& sp,
                                 const QuadratureOptions& opt);

/// int |grad_X u|^2 / rho^4 <= C * (four RHS terms); C is not explicit, so
/// the empirical constant is reported.
InequalityReport check_grad_hardy(const FieldPtr& u, double r, const SpaceParams& sp,
                                  const QuadratureOptions& opt);

/// Chain int u^2/rho^6 <= int u^2/(rho^4 |x|^2) <= C * (same four terms);
/// the first link is gated (pointwise domination), C is reported.
InequalityReport check_weighted_hardy(const FieldPtr& u, double r,
                                      const SpaceParams& sp,
                                      const QuadratureOptions& opt);

/// All applicable checkers on one shared node set (one jet evaluation per
/// node). Skips the inequality families whose hypotheses the space fails.
std::vector<InequalityReport> run_hardy_suite(const FieldPtr& u, double r,
                                              const SpaceParams& sp,
                                              const QuadratureOptions& opt);

/// RFC-4180 CSV, one row per report, 17-significant-digit floats.
void write_reports_csv(const std::string& path,
                       std::span<const InequalityReport> reports);

} // namespace grushin
