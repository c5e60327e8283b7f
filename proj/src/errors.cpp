#include "tvbo/errors.hpp"

namespace tvbo {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ToleranceUnreachable: return "ToleranceUnreachable";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
        case ErrorKind::WrongClass: return "WrongClass";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::CapExceeded: return "CapExceeded";
        case ErrorKind::MissingEigenvectors: return "MissingEigenvectors";
        case ErrorKind::ScaleMismatch: return "ScaleMismatch";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

}  // namespace tvbo
