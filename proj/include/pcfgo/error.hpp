#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcfgo {

/// Failure categories raised by library operations.
enum class ErrorCode {
    NearCenter,
    TooFewPoints,
    DegenerateGeometry,
    PlaneUnavailable,
    InsufficientSatellites,
    SingularGeometry,
    NotConverged,
    EmptyGraph,
    KeyMismatch,
    Empty,
    InvalidArgument,
    Config,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::NearCenter: return "NearCenter";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::PlaneUnavailable: return "PlaneUnavailable";
    case ErrorCode::InsufficientSatellites: return "InsufficientSatellites";
    case ErrorCode::SingularGeometry: return "SingularGeometry";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace pcfgo
