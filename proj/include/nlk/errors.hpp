#pragma once

#include <stdexcept>
#include <string>

namespace nlk {

/// Base class for all failures raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input (parameters, grids, config files). Maps to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

class BadGrid : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A computation that could not produce a trustworthy result. Maps to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NonIntegrable : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DomainTooSmall : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class Blowup : public NumericalError {
public:
    Blowup(const std::string& what, long step, std::size_t node)
        : NumericalError(what), step_(step), node_(node) {}
    long step() const noexcept { return step_; }
    std::size_t node() const noexcept { return node_; }

private:
    long step_;
    std::size_t node_;
};

class NoConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NewtonDiverged : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularJacobian : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StepFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EnvelopeViolated : public NumericalError {
public:
    EnvelopeViolated(const std::string& what, double t, double margin)
        : NumericalError(what), t_(t), margin_(margin) {}
    double time() const noexcept { return t_; }
    double margin() const noexcept { return margin_; }

private:
    double t_;
    double margin_;
};

} // namespace nlk
