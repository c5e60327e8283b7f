#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tvbo {

enum class ErrorKind {
    InvalidArgument,
    ToleranceUnreachable,
    DimensionMismatch,
    ConvergenceFailure,
    WrongClass,
    SingularSystem,
    CapExceeded,
    MissingEigenvectors,
    ScaleMismatch,
    InsufficientData,
    ParseError,
    InvalidConfig,
    IoFailure,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it to an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    /// Message without the kind prefix.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

}  // namespace tvbo
