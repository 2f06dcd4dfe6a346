#pragma once

#include <stdexcept>
#include <string>

namespace grushin {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Evaluation requested at a point where the quantity has no value
/// (typically the gauge origin, where the angle function is directional).
class DegeneratePoint : public Error {
public:
    explicit DegeneratePoint(const std::string& msg) : Error(msg) {}
};

/// A reduced 2-d quadrature was requested for a field that is not bi-radial.
class NonBiradial : public Error {
public:
    explicit NonBiradial(const std::string& msg) : Error(msg) {}
};

/// The declared singularity exponents make the integral divergent.
class NonIntegrableWeight : public Error {
public:
    explicit NonIntegrableWeight(const std::string& msg) : Error(msg) {}
};

/// Invalid argument or configuration.
class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

/// Linear solve did not reach the residual target.
class SolveFailure : public Error {
public:
    explicit SolveFailure(const std::string& msg) : Error(msg) {}
};

/// The assembled system is singular or the factorization failed.
class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& msg) : Error(msg) {}
};

/// Query outside the rectangle of a grid interpolant.
class OutOfDomain : public Error {
public:
    explicit OutOfDomain(const std::string& msg) : Error(msg) {}
};

/// H(r) vanished (within error budget) where a positive value was required.
class DegenerateH : public Error {
public:
    explicit DegenerateH(const std::string& msg) : Error(msg) {}
};

/// Too few samples for a fit.
class InsufficientRange : public Error {
public:
    explicit InsufficientRange(const std::string& msg) : Error(msg) {}
};

} // namespace grushin
