// errors.hpp
//
// Exception hierarchy shared by every module of the library.  All errors
// derive from eltest::Error so callers can catch one base type; the concrete
// classes mirror the distinct failure modes of the numerical routines
// (infeasible convex hulls, singular linear systems, bad user input, ...).

#ifndef ELTEST_ERRORS_HPP_INCLUDED
#define ELTEST_ERRORS_HPP_INCLUDED

#include <stdexcept>
#include <string>

namespace eltest {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- model -----------------------------------------------------------------

// Moment function or jacobian produced a NaN/Inf entry.
class NonFiniteModelOutput : public Error {
public:
    explicit NonFiniteModelOutput(const std::string& what) : Error(what) {}
};

// Data/parameter dimensions do not match the model contract.
class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

// Nonpositive variance offset passed to the builtin normal model.
class InvalidDelta : public Error {
public:
    explicit InvalidDelta(const std::string& what) : Error(what) {}
};

// --- tilting ---------------------------------------------------------------

// Zero is not in (or is too close to the boundary of) the convex hull of the
// moment vectors, so no valid multiplier exists.
class HullFailure : public Error {
public:
    explicit HullFailure(const std::string& what) : Error(what) {}
};

// Second-moment matrix of the tilted weights is numerically singular.
class SingularMoments : public Error {
public:
    explicit SingularMoments(const std::string& what) : Error(what) {}
};

// --- estimators ------------------------------------------------------------

// Outer parameter search exhausted its iteration budget.
class OuterNoConvergence : public Error {
public:
    explicit OuterNoConvergence(const std::string& what) : Error(what) {}
};

// Every candidate starting point failed the inner tilting problem.
class AllStartsFailed : public Error {
public:
    explicit AllStartsFailed(const std::string& what) : Error(what) {}
};

// --- divergence ------------------------------------------------------------

// Weight vectors of different lengths.
class LengthMismatch : public Error {
public:
    explicit LengthMismatch(const std::string& what) : Error(what) {}
};

// A weight that must be positive (or nonnegative) is not.
class NonpositiveWeight : public Error {
public:
    explicit NonpositiveWeight(const std::string& what) : Error(what) {}
};

// Argument outside the domain of an outer transform h.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

// Invalid order parameters for a parametric divergence family.
class InvalidOrder : public Error {
public:
    explicit InvalidOrder(const std::string& what) : Error(what) {}
};

// --- testing ---------------------------------------------------------------

// The tilting problem is infeasible at the hypothesized parameter value.
class NullInfeasible : public Error {
public:
    explicit NullInfeasible(const std::string& what) : Error(what) {}
};

// --- asymptotics -----------------------------------------------------------

// Moment jacobian does not have full column rank.
class RankDeficient : public Error {
public:
    explicit RankDeficient(const std::string& what) : Error(what) {}
};

// Evaluation at a pole of an influence-function denominator.
class PoleEncountered : public Error {
public:
    explicit PoleEncountered(const std::string& what) : Error(what) {}
};

// Numerically singular jacobian of the stacked estimating system.
class SingularGamma : public Error {
public:
    explicit SingularGamma(const std::string& what) : Error(what) {}
};

// --- cli / configuration ---------------------------------------------------

// Malformed configuration, option values, or input files.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace eltest

#endif
