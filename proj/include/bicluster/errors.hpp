#pragma once

#include <stdexcept>
#include <string>

namespace bicluster {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An argument is out of its admissible range (bad k, nonpositive bound, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Shapes or ranks of inputs are inconsistent with each other.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Numeric content is invalid (non-finite entries, zero margins, non-sorted values).
class DataError : public Error {
public:
    using Error::Error;
};

/// File or stream problem.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace bicluster
