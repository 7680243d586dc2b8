#include "evr/error.hpp"

namespace evr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ERR_PARSE";
    case ErrorCode::kUnknownField: return "ERR_UNKNOWN_FIELD";
    case ErrorCode::kIndexOutOfRange: return "ERR_INDEX_OUT_OF_RANGE";
    case ErrorCode::kNotValidated: return "ERR_NOT_VALIDATED";
    case ErrorCode::kNotSinglyConnected: return "ERR_NOT_SINGLY_CONNECTED";
    case ErrorCode::kNoSuchNode: return "ERR_NO_SUCH_NODE";
    case ErrorCode::kInvalidEvidence: return "ERR_INVALID_EVIDENCE";
    case ErrorCode::kDuplicateEvidence: return "ERR_DUPLICATE_EVIDENCE";
    case ErrorCode::kZeroProbabilityEvidence: return "ERR_ZERO_PROBABILITY_EVIDENCE";
    case ErrorCode::kNoSuchEvidence: return "ERR_NO_SUCH_EVIDENCE";
    case ErrorCode::kTooLarge: return "ERR_TOO_LARGE";
    case ErrorCode::kZeroNormalizer: return "ERR_ZERO_NORMALIZER";
    case ErrorCode::kUnobservableFinding: return "ERR_UNOBSERVABLE_FINDING";
    case ErrorCode::kAlreadyObserved: return "ERR_ALREADY_OBSERVED";
    case ErrorCode::kInvalidConfig: return "ERR_INVALID_CONFIG";
    case ErrorCode::kInvalidSource: return "ERR_INVALID_SOURCE";
    case ErrorCode::kNoSuchSource: return "ERR_NO_SUCH_SOURCE";
    case ErrorCode::kSourceExhausted: return "ERR_SOURCE_EXHAUSTED";
    case ErrorCode::kNoUsableSource: return "ERR_NO_USABLE_SOURCE";
    case ErrorCode::kNotTerminated: return "ERR_NOT_TERMINATED";
    case ErrorCode::kUnknownCase: return "ERR_UNKNOWN_CASE";
    case ErrorCode::kNoSuchSession: return "ERR_NO_SUCH_SESSION";
    case ErrorCode::kRevisionConflict: return "ERR_REVISION_CONFLICT";
    case ErrorCode::kIo: return "ERR_IO";
  }
  return "ERR_UNKNOWN";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& subject) {
  std::string out(to_string(code));
  if (!subject.empty()) out += " [" + subject + "]";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string message, std::string subject)
    : std::runtime_error(compose(code, message, subject)),
      code_(code),
      subject_(std::move(subject)),
      detail_(std::move(message)) {}

}  // namespace evr
