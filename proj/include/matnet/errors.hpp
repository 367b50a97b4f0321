#pragma once

#include <stdexcept>
#include <string>

namespace matnet {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Material parameters violate thermodynamic admissibility.
class AdmissibilityError : public Error {
public:
    using Error::Error;
};

/// An iterative solve failed to converge.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double residual)
        : Error(msg + " (final residual " + std::to_string(residual) + ")"),
          final_residual(residual) {}
    double final_residual;
};

/// Every base activation is non-positive: the network has no active nodes.
class DegenerateNetworkError : public Error {
public:
    using Error::Error;
};

/// Interface acoustic matrix H^T C H is singular.
class SingularInterfaceError : public Error {
public:
    using Error::Error;
};

/// Malformed or unsupported file content.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or invalid sample data.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace matnet
