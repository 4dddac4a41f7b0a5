#pragma once

#include <stdexcept>
#include <string>

namespace mfl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes of arguments do not fit together (state/param/data widths, grids).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition was violated by the caller.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A solver or update produced NaN/Inf. Usually a step size that is too
/// large for the model's Lipschitz constants.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// Malformed or unknown entries in a configuration file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mfl
