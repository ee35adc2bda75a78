#pragma once

#include <stdexcept>
#include <string>

namespace irof {

/// Base of every error raised by the engine. The subclass decides the CLI exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters, flags or configuration documents (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (exit code 4).
class DataError : public Error {
public:
    using Error::Error;
};

/// Failure talking to, or rejected by, the model backend (exit code 3).
class BackendError : public Error {
public:
    BackendError(const std::string& what, int attempts = 1, bool retryable = false)
        : Error(what), attempts_(attempts), retryable_(retryable) {}

    [[nodiscard]] int attempts() const noexcept { return attempts_; }
    [[nodiscard]] bool retryable() const noexcept { return retryable_; }

private:
    int attempts_;
    bool retryable_;
};

} // namespace irof
