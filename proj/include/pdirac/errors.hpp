#pragma once

#include <stdexcept>
#include <string>

namespace pdirac {

/// Precondition on an argument was not met (wrong dimension, wrong grade, non-unit input).
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Bad numeric parameter such as p <= 1 or a non-positive step.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Attempt to invert a zero or non-invertible element.
class SingularElementError : public std::domain_error {
public:
    explicit SingularElementError(const std::string& what) : std::domain_error(what) {}
};

/// cx + d vanishes (or nearly so) at the evaluation point of a Moebius map.
class PoleError : public std::domain_error {
public:
    explicit PoleError(const std::string& what) : std::domain_error(what) {}
};

/// A finite-difference stencil touches a declared singular set, or |f| vanishes
/// on a stencil where the nonlinearity |f|^(p-2) is singular.
class StencilError : public std::domain_error {
public:
    explicit StencilError(const std::string& what) : std::domain_error(what) {}
};

/// A theorem's hypothesis fails on the working domain (pole in the closure, f' = 0, ...).
class HypothesisViolation : public std::domain_error {
public:
    explicit HypothesisViolation(const std::string& what) : std::domain_error(what) {}
};

/// Not enough usable data to fit an estimate.
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pdirac
