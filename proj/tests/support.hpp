#pragma once

#include <cmath>
#include <random>

#include "grushin/fields.hpp"
#include "grushin/geometry.hpp"
#include "grushin/types.hpp"

namespace testsup {

using namespace grushin;

/// Random point with every block away from the axes (|x|, |y| bounded below),
/// so all analytic jets are regular.
inline Point random_point(std::mt19937_64& rng, const SpaceParams& sp,
                          double lo = 0.05, double hi = 1.5) {
    std::uniform_real_distribution<double> u(-hi, hi);
    for (;;) {
        Point p(sp);
        for (int i = 0; i < sp.dim(); ++i) p.c[i] = u(rng);
        if (std::sqrt(p.x_norm2()) > lo && std::sqrt(p.y_norm2()) > lo) return p;
    }
}

/// Relative error above scale 1, absolute below (so an exact-zero target
/// still admits roundoff).
inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

} // namespace testsup
