#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace synthscan {

// Exit-code buckets used by the CLI: 2 usage, 3 data, 4 backend, 5 internal.
enum class ErrorKind { usage = 2, data = 3, backend = 4, internal = 5 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& code, const std::string& message) {
    throw Error(kind, code, message);
}

[[noreturn]] inline void raise_usage(const std::string& code, const std::string& message) {
    raise(ErrorKind::usage, code, message);
}

[[noreturn]] inline void raise_data(const std::string& code, const std::string& message) {
    raise(ErrorKind::data, code, message);
}

[[noreturn]] inline void raise_backend(const std::string& code, const std::string& message) {
    raise(ErrorKind::backend, code, message);
}

[[noreturn]] inline void raise_internal(const std::string& code, const std::string& message) {
    raise(ErrorKind::internal, code, message);
}

}  // namespace synthscan
