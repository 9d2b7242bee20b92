#pragma once

#include <stdexcept>
#include <string>

namespace evidential {

// Stable error classes surfaced by the CLI as one-line code prefixes.
enum class ErrorCode { parse, conflict, capacity, validate, usage };

inline const char* error_prefix(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse: return "E_PARSE";
        case ErrorCode::conflict: return "E_CONFLICT";
        case ErrorCode::capacity: return "E_CAPACITY";
        case ErrorCode::validate: return "E_VALIDATE";
        case ErrorCode::usage: return "E_USAGE";
    }
    return "E_VALIDATE";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const char* prefix() const noexcept { return error_prefix(code_); }

private:
    ErrorCode code_;
};

struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(ErrorCode::parse, m) {}
};

// Total conflict: the combined evidence is contradictory.
struct ConflictError : Error {
    explicit ConflictError(const std::string& m) : Error(ErrorCode::conflict, m) {}
};

struct CapacityError : Error {
    explicit CapacityError(const std::string& m) : Error(ErrorCode::capacity, m) {}
};

struct ValidateError : Error {
    explicit ValidateError(const std::string& m) : Error(ErrorCode::validate, m) {}
};

struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error(ErrorCode::usage, m) {}
};

}  // namespace evidential
