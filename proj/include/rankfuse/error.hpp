#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rankfuse {

// Machine-readable failure categories. The CLI maps these onto its exit
// codes: Io -> 1, input/validation problems -> 2, DegenerateVariance -> 3.
enum class ErrorCode {
    Io,
    ParseError,
    ConfigError,
    DuplicateCounty,
    ConflictingGroup,
    UnassignedState,
    EmptyGroup,
    UnimputableStateOutcome,
    NotAligned,
    TooFewCounties,
    NoRetainedStates,
    GroupEmptied,
    PlanMismatch,
    DomainError,
    GroupTooSmall,
    DegenerateVariance,
    ZeroMad,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io: return "IO_ERROR";
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::ConfigError: return "CONFIG_ERROR";
        case ErrorCode::DuplicateCounty: return "DUPLICATE_COUNTY";
        case ErrorCode::ConflictingGroup: return "CONFLICTING_GROUP";
        case ErrorCode::UnassignedState: return "UNASSIGNED_STATE";
        case ErrorCode::EmptyGroup: return "EMPTY_GROUP";
        case ErrorCode::UnimputableStateOutcome: return "UNIMPUTABLE_STATE_OUTCOME";
        case ErrorCode::NotAligned: return "NOT_ALIGNED";
        case ErrorCode::TooFewCounties: return "TOO_FEW_COUNTIES";
        case ErrorCode::NoRetainedStates: return "NO_RETAINED_STATES";
        case ErrorCode::GroupEmptied: return "GROUP_EMPTIED";
        case ErrorCode::PlanMismatch: return "PLAN_MISMATCH";
        case ErrorCode::DomainError: return "DOMAIN_ERROR";
        case ErrorCode::GroupTooSmall: return "GROUP_TOO_SMALL";
        case ErrorCode::DegenerateVariance: return "DEGENERATE_VARIANCE";
        case ErrorCode::ZeroMad: return "ZERO_MAD";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace rankfuse
