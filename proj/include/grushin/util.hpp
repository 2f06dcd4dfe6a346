#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace grushin {

/// Fixed-shape pairwise summation. The reduction tree depends only on the
/// buffer length, so the result is bit-identical no matter how the buffer
/// was filled (serially or by any number of workers).
double pairwise_sum(std::span<const double> v);

/// Run body(i) for i in [0, n). Workers write to disjoint, index-addressed
/// slots only; the chunking never influences numerical results.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

/// Shortest representation of x that round-trips through decimal
/// (17 significant digits).
std::string format_double(double x);

/// Least-squares fit y = intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_abs_residual = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Nodes and weights of the N-point Gauss-Legendre rule on [-1, 1].
/// Computed once per order and cached.
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int order);

/// Halton sequence point k (0-based) in [0,1)^dim, bases = first dim primes.
void halton_point(std::uint64_t k, int dim, double* out);

/// Surface area of the unit sphere in R^k (2 for k = 1).
double unit_sphere_area(int k);

} // namespace grushin
