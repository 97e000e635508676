#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sigctl {

enum class ErrorCode {
  DanglingReference,
  EmptyPhaseSet,
  NonDraining,
  BadProportion,
  BadTopology,
  UnknownJunction,
  NonIntegralInterval,
  BadHorizon,
  TrajectoryTooShort,
  TooLarge,
  Unbounded,
  Infeasible,
  BadDimensions,
  EmptySeries,
  IoFailure,
  Schema,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::EmptyPhaseSet: return "EmptyPhaseSet";
    case ErrorCode::NonDraining: return "NonDraining";
    case ErrorCode::BadProportion: return "BadProportion";
    case ErrorCode::BadTopology: return "BadTopology";
    case ErrorCode::UnknownJunction: return "UnknownJunction";
    case ErrorCode::NonIntegralInterval: return "NonIntegralInterval";
    case ErrorCode::BadHorizon: return "BadHorizon";
    case ErrorCode::TrajectoryTooShort: return "TrajectoryTooShort";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::BadDimensions: return "BadDimensions";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::Schema: return "Schema";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sigctl
