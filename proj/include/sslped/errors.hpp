#pragma once

#include <stdexcept>
#include <string>

namespace sslped {

/// Base of every error raised by the library. The CLI maps the subclasses
/// onto its exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration (exit code 1).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a degenerate optimisation problem (exit code 3).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace sslped
