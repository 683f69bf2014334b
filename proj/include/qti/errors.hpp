#pragma once

#include <stdexcept>
#include <string>

namespace qti {

// Root of every error the library throws. Callers that only care about
// "something numerical went wrong" can catch this one.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class OrderOverflowError : public Error {
public:
    using Error::Error;
};

class InvalidGridError : public Error {
public:
    using Error::Error;
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// Integrator produced a non-finite state; the time step is too large for the
// stiffest mode of the system.
class DivergenceError : public Error {
public:
    using Error::Error;
};

class OracleError : public Error {
public:
    using Error::Error;
};

class InvalidTransitionError : public Error {
public:
    using Error::Error;
};

class InvalidDistributionError : public Error {
public:
    using Error::Error;
};

class DegeneratePosteriorError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& message, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace qti
