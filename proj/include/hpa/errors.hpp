#pragma once

#include <stdexcept>
#include <string>

namespace hpa {

/// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorKind { Input, Numeric, NonConvergence };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Bad arguments, violated preconditions, malformed files.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

/// Non-finite values, divergence, singular data where a result was required.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// Iterative procedure failed to meet its tolerance.
class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& what) : Error(ErrorKind::NonConvergence, what) {}
};

}  // namespace hpa
