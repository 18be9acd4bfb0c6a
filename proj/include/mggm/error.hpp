#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mggm {

enum class ErrorCode {
    MalformedManifest,
    ShapeMismatch,
    NonFiniteValue,
    IoFailure,
    InvalidArgument,
    DegenerateMask,
    NotSPD,
    NotPSD,
    ZeroVarianceColumn,
    NonPositiveDiagonal,
    SvdFailure,
    SingularOmega,
    EmptyEdgeSet,
    BadAlpha,
    NegativeC,
    ZeroVariance,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Library error carrying a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace mggm
