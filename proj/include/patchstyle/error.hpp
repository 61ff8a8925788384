#pragma once

#include <stdexcept>
#include <string>

namespace patchstyle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sizes of two inputs that must agree do not.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A sampling grid or aggregation would leave pixels uncovered.
class CoverageError : public Error {
public:
    using Error::Error;
};

/// Parameters violate a documented precondition.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read, decoded, written or parsed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace patchstyle
