#include "collapse_lab/error.hpp"

namespace collapse_lab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParameterDomain: return "parameter-domain";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerateData: return "degenerate-data";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kIndex: return "index";
    case ErrorCode::kScheduleOverflow: return "schedule-overflow";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kBudget: return "budget";
    case ErrorCode::kFactorization: return "factorization";
    case ErrorCode::kConditioning: return "conditioning";
    case ErrorCode::kLemmaViolation: return "lemma-violation";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

ConvergenceError::ConvergenceError(const std::string& message, int iterations)
    : Error(ErrorCode::kConvergence, message + " (after " + std::to_string(iterations) + " iterations)"),
      iterations_(iterations) {}

}  // namespace collapse_lab
