#pragma once

#include <stdexcept>
#include <string>

namespace windlq {

// Base of every error raised by the library. The `module` tag names the
// component that raised it so the CLI can print module-tagged diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

// Malformed input: bad grid, out-of-range sample, schema violation, non-PD weight.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation (v <= 0, omega < omega_min).
class DomainError : public Error {
public:
    using Error::Error;
};

// The equilibrium condition C_p(lambda_s, theta) = target has no root in the pitch bounds.
class NoEquilibrium : public Error {
public:
    explicit NoEquilibrium(const std::string& what) : Error("equilibrium", what) {}
};

class Infeasible : public Error {
public:
    explicit Infeasible(const std::string& what) : Error("synthesis", what) {}
};

class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& what) : Error("synthesis", what) {}
};

class CertificationFailure : public Error {
public:
    explicit CertificationFailure(const std::string& what) : Error("synthesis", what) {}
};

class SimulationAbort : public Error {
public:
    SimulationAbort(long step, const std::string& what)
        : Error("sim", "step " + std::to_string(step) + ": " + what), step_(step) {}

    long step() const noexcept { return step_; }

private:
    long step_;
};

}  // namespace windlq
