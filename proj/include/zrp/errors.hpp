#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace zrp {

/// Invalid parameters or arguments outside an operation's domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The requested configuration space is larger than the enumeration cap.
class SizeError : public std::length_error {
public:
    SizeError(const std::string& what, std::uint64_t cardinality)
        : std::length_error(what), cardinality_(cardinality) {}

    std::uint64_t cardinality() const noexcept { return cardinality_; }

private:
    std::uint64_t cardinality_;
};

/// A series that does not converge for the given parameter.
class DivergenceError : public DomainError {
public:
    using DomainError::DomainError;
};

/// A linear solve failed (singular factorization or no convergence).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace zrp
