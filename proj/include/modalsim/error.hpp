#pragma once

#include <stdexcept>
#include <string>

namespace modalsim {

// Error categories map 1:1 onto CLI exit codes:
// validation = 1, numerical = 2, io = 3.
enum class ErrorKind { validation = 1, numerical = 2, io = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(ErrorKind::validation, msg) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(ErrorKind::numerical, msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(ErrorKind::io, msg) {}
};

} // namespace modalsim
