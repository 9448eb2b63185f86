#pragma once

#include <stdexcept>
#include <string>

namespace gearsim {

// Base of every error raised by the library. The CLI maps the subclasses
// onto process exit codes (config 2, numerical 3, io 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user input: geometry, configuration, preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

class GeometryError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Singular matrices, solver divergence, non-convergence.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gearsim
