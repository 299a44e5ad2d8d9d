#pragma once

#include <stdexcept>
#include <string>

namespace toirc {

/// Failure category. The CLI maps these onto its exit codes.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Bad configuration or command-line usage.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Missing, malformed or inconsistent input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Singular systems, non-finite values, degenerate statistics.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Rethrows e as the same concrete type with a prefix on its message.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& prefix)
{
    const std::string what = prefix + ": " + e.what();
    switch (e.kind()) {
    case ErrorKind::usage:
        throw UsageError(what);
    case ErrorKind::data:
        throw DataError(what);
    case ErrorKind::numeric:
        break;
    }
    throw NumericError(what);
}

} // namespace toirc
