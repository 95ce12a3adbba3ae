#pragma once

#include <stdexcept>
#include <string>

namespace quadinv {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain (time range, branch, radicand).
class DomainError : public Error {
public:
    using Error::Error;
};

// Caller misuse: mismatched grids, bad indices, malformed specs.
class UsageError : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

// Ladder form requested where C0 <= 0.
class ModeError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Errors tied to a location on the time axis.
class LocatedError : public Error {
public:
    LocatedError(const std::string& what, double t);
    double where() const noexcept { return t_; }

private:
    double t_;
};

class IntegrationError : public LocatedError {
public:
    using LocatedError::LocatedError;
};

class SingularityError : public LocatedError {
public:
    using LocatedError::LocatedError;
};

} // namespace quadinv
