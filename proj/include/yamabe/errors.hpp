#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace yamabe {

enum class ErrorCode {
    BoundaryEdge,
    DegenerateFace,
    Disconnected,
    DuplicateFace,
    InvalidIndex,
    FlipCreatesDuplicateEdge,
    FlipDegenerate,
    NotAnEdge,
    DegenerateTriangle,
    OutOfConformalDomain,
    PathLeavesDomain,
    StepUnderflow,
    NewMetricOutOfDomain,
    MaxSurgeriesExceeded,
    InsufficientTail,
    TooLarge,
    NotAdmissible,
    UnknownFlag,
    MissingInput,
    BadArgument,
    BadMeshFile,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::BoundaryEdge: return "BoundaryEdge";
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::DuplicateFace: return "DuplicateFace";
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::FlipCreatesDuplicateEdge: return "FlipCreatesDuplicateEdge";
    case ErrorCode::FlipDegenerate: return "FlipDegenerate";
    case ErrorCode::NotAnEdge: return "NotAnEdge";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::OutOfConformalDomain: return "OutOfConformalDomain";
    case ErrorCode::PathLeavesDomain: return "PathLeavesDomain";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::NewMetricOutOfDomain: return "NewMetricOutOfDomain";
    case ErrorCode::MaxSurgeriesExceeded: return "MaxSurgeriesExceeded";
    case ErrorCode::InsufficientTail: return "InsufficientTail";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::UnknownFlag: return "UnknownFlag";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::BadArgument: return "BadArgument";
    case ErrorCode::BadMeshFile: return "BadMeshFile";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Base of every error raised by the library. The code identifies the
/// failure class; the message carries the diagnostic detail.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what)
        , code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace yamabe
