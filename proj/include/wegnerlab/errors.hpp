#pragma once

#include <stdexcept>
#include <string>

namespace wegnerlab {

enum class ErrorKind {
    invalid_argument,
    invariant_violation,
    resource_limit,
    unsupported_model,
    hypothesis_failed,
    precondition_violated,
    pole_error,
    forbidden_window,
    schema_violation,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

}  // namespace wegnerlab
