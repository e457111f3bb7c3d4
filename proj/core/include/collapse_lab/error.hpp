#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace collapse_lab {

enum class ErrorCode {
  kParameterDomain,
  kEmptyDataset,
  kInsufficientData,
  kDegenerateData,
  kConvergence,
  kIndex,
  kScheduleOverflow,
  kConfiguration,
  kBudget,
  kFactorization,
  kConditioning,
  kLemmaViolation,
  kUnsupported,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by iterative estimators; carries the iteration at which they gave up.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, int iterations);

  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

}  // namespace collapse_lab
