#pragma once

#include <stdexcept>
#include <string>

namespace ocarnot {

/// Base of every error raised by the library, with a short machine tag
/// ("domain", "closure", ...).
class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& what)
        : std::runtime_error(what), tag_(std::move(tag)) {}

    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

/// Non-positive temperature/pressure/volume, negative mass, or a state that
/// left the positive domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class RosterError : public Error {
public:
    explicit RosterError(const std::string& what) : Error("roster", what) {}
};

/// Extraction requested from a species that has no mass left.
class EmptySpeciesError : public Error {
public:
    explicit EmptySpeciesError(const std::string& what) : Error("empty-species", what) {}
};

class IntegratorError : public Error {
public:
    explicit IntegratorError(const std::string& what) : Error("integrator", what) {}
};

class QuadratureError : public Error {
public:
    explicit QuadratureError(const std::string& what) : Error("quadrature", what) {}
};

/// A cycle whose segments do not bring the state back to the start.
class ClosureError : public Error {
public:
    explicit ClosureError(const std::string& what) : Error("closure", what) {}
};

class BoundaryMismatchError : public Error {
public:
    explicit BoundaryMismatchError(const std::string& what) : Error("boundary-mismatch", what) {}
};

class StepSizeError : public Error {
public:
    explicit StepSizeError(const std::string& what) : Error("step-size", what) {}
};

class RefinementError : public Error {
public:
    explicit RefinementError(const std::string& what) : Error("refinement", what) {}
};

class InvariantViolation : public Error {
public:
    explicit InvariantViolation(const std::string& what) : Error("invariant", what) {}
};

class SpecError : public Error {
public:
    explicit SpecError(const std::string& what) : Error("spec", what) {}
};

}  // namespace ocarnot
