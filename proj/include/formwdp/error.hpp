#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace formwdp {

enum class ErrorCode {
  ParseError,
  UnknownField,
  RateOutOfRange,
  RatePrecision,
  InvalidValue,
  UnknownCompetitor,
  InvalidCompetitor,
  NonlinearTerm,
  DuplicateDrug,
  MissingPreferredRate,
  StatusOutOfRange,
  ShareSum,
  InvalidShareModel,
  MissingStatusRate,
  NoFeasibleAssignment,
  TooLarge,
  ShareKeyMissing,
  WeightsDegenerate,
  DegenerateBids,
  ExceedsMaxRebate,
  UnsupportedFormat,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::UnknownField: return "UNKNOWN_FIELD";
    case ErrorCode::RateOutOfRange: return "RATE_OUT_OF_RANGE";
    case ErrorCode::RatePrecision: return "RATE_PRECISION";
    case ErrorCode::InvalidValue: return "INVALID_VALUE";
    case ErrorCode::UnknownCompetitor: return "UNKNOWN_COMPETITOR";
    case ErrorCode::InvalidCompetitor: return "INVALID_COMPETITOR";
    case ErrorCode::NonlinearTerm: return "NONLINEAR_TERM";
    case ErrorCode::DuplicateDrug: return "DUPLICATE_DRUG";
    case ErrorCode::MissingPreferredRate: return "MISSING_PREFERRED_RATE";
    case ErrorCode::StatusOutOfRange: return "STATUS_OUT_OF_RANGE";
    case ErrorCode::ShareSum: return "SHARE_SUM";
    case ErrorCode::InvalidShareModel: return "INVALID_SHARE_MODEL";
    case ErrorCode::MissingStatusRate: return "MISSING_STATUS_RATE";
    case ErrorCode::NoFeasibleAssignment: return "NO_FEASIBLE_ASSIGNMENT";
    case ErrorCode::TooLarge: return "TOO_LARGE";
    case ErrorCode::ShareKeyMissing: return "SHARE_KEY_MISSING";
    case ErrorCode::WeightsDegenerate: return "WEIGHTS_DEGENERATE";
    case ErrorCode::DegenerateBids: return "DEGENERATE_BIDS";
    case ErrorCode::ExceedsMaxRebate: return "EXCEEDS_MAX_REBATE";
    case ErrorCode::UnsupportedFormat: return "UNSUPPORTED_FORMAT";
  }
  return "UNKNOWN";
}

/// Base exception for engine failures; carries a stable machine code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// One problem found while loading or validating a document. `path` is a
/// JSON-pointer-like location ("drugs[2].bids.exclusive").
struct ValidationError {
  ErrorCode code;
  std::string path;
  std::string message;

  [[nodiscard]] std::string to_string() const {
    std::string out(formwdp::to_string(code));
    if (!path.empty()) out += " at " + path;
    return out + ": " + message;
  }
};

}  // namespace formwdp
