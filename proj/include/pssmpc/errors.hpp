#pragma once

#include <stdexcept>
#include <string>

namespace pssmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinite entry was found where finite data is required.
class NonFiniteInput : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// An iterative method exhausted its iteration budget.
class MaxIterationsReached : public Error {
public:
    using Error::Error;
};

/// A search result would exceed representable/allowed bounds.
class Overflow : public Error {
public:
    using Error::Error;
};

/// The same agent was passed twice to a pairwise barrier.
class DegeneratePair : public Error {
public:
    using Error::Error;
};

/// A closed-form one-dimensional controller has an empty feasible set.
class Infeasible1D : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatch(what);
}

}  // namespace detail

}  // namespace pssmpc
