#pragma once

#include <stdexcept>
#include <string>

namespace spdepv {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A series was requested outside its convergence region.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Smoothness index incompatible with the requested quantity
/// (e.g. r >= gamma - d/2, or a SUB-only functional used above -d/2).
class RegimeError : public Error {
public:
    using Error::Error;
};

/// Matrix factorization or another numerical step failed.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent experiment / CLI configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace spdepv
