#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a type invariant (nonpositive mean, negative rate, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

/// Malformed text input. `position()` is the 0-based offset of the offending character.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " (at position " + std::to_string(position) + ")"), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Argument outside the domain of a moment/cumulant generating function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operation called in a regime where its result does not exist (e.g. r* with rho <= 1).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Discretization grid inconsistent with the requested range.
class GridError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace hsc
