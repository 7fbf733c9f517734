#pragma once

#include <stdexcept>
#include <string>

namespace egovario {

/// Coarse error class; each maps to one CLI exit code and one HTTP status.
enum class ErrorKind { parse, validation, numerical, resource };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed input text or a table that does not meet the column schema.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorKind::parse, what) {}
};

/// Bad arguments, inconsistent inputs, or too little data.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Estimation or factorization failure.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// A bounded loop or capacity limit was exhausted.
class ResourceError : public Error {
public:
    explicit ResourceError(const std::string& what) : Error(ErrorKind::resource, what) {}
};

[[nodiscard]] constexpr int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::parse: return 2;
        case ErrorKind::validation: return 3;
        case ErrorKind::numerical: return 4;
        case ErrorKind::resource: return 5;
    }
    return 1;
}

[[nodiscard]] constexpr const char* kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::parse: return "parse";
        case ErrorKind::validation: return "validation";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::resource: return "resource";
    }
    return "unknown";
}

}  // namespace egovario
