#pragma once

#include <stdexcept>
#include <string>

namespace ovkern {

// Process exit codes used by the CLI when an error escapes to main().
// 2 = usage, 3 = data/model validation, 4 = numerical failure.
enum class ErrorKind { validation = 3, numerical = 4 };

class Error : public std::runtime_error {
public:
    Error(std::string code, ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)), kind_(kind) {}

    // short machine-parsable identifier, e.g. "dimension" or "rootfind"
    const std::string& code() const { return code_; }
    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    std::string code_;
    ErrorKind kind_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& msg)
        : Error("dimension", ErrorKind::validation, msg) {}
};

struct RangeError : Error {
    explicit RangeError(const std::string& msg)
        : Error("range", ErrorKind::validation, msg) {}
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& msg)
        : Error("parameter", ErrorKind::validation, msg) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& msg)
        : Error("validation", ErrorKind::validation, msg) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg)
        : Error("parse", ErrorKind::validation, msg) {}
};

struct SizeError : Error {
    explicit SizeError(const std::string& msg)
        : Error("size", ErrorKind::validation, msg) {}
};

struct UnsupportedKernelError : Error {
    explicit UnsupportedKernelError(const std::string& msg)
        : Error("unsupported-kernel", ErrorKind::validation, msg) {}
};

struct CombinatorError : Error {
    explicit CombinatorError(const std::string& msg)
        : Error("combinator", ErrorKind::validation, msg) {}
};

struct RootFindError : Error {
    explicit RootFindError(const std::string& msg)
        : Error("rootfind", ErrorKind::numerical, msg) {}
};

struct ConditioningError : Error {
    explicit ConditioningError(const std::string& msg)
        : Error("conditioning", ErrorKind::numerical, msg) {}
};

struct KernelValidityError : Error {
    explicit KernelValidityError(const std::string& msg)
        : Error("kernel-validity", ErrorKind::numerical, msg) {}
};

struct OperatorError : Error {
    explicit OperatorError(const std::string& msg)
        : Error("operator", ErrorKind::numerical, msg) {}
};

} // namespace ovkern
