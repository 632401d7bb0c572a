#pragma once

#include <stdexcept>
#include <string>

namespace gwrw {

enum class ErrorCode {
  InvalidLaw,
  NotSupercritical,
  NoLeaves,
  NotSubballistic,
  DegreeImpossible,
  TrapBudget,
  BudgetExceeded,
  AlphaOutOfRange,
  InvalidArgument,
  Config,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidLaw: return "InvalidLaw";
    case ErrorCode::NotSupercritical: return "NotSupercritical";
    case ErrorCode::NoLeaves: return "NoLeaves";
    case ErrorCode::NotSubballistic: return "NotSubballistic";
    case ErrorCode::DegreeImpossible: return "DegreeImpossible";
    case ErrorCode::TrapBudget: return "TrapBudget";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "Config";
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

}  // namespace gwrw
