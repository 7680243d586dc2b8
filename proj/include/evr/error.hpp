#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evr {

enum class ErrorCode {
  kParse,
  kUnknownField,
  kIndexOutOfRange,
  kNotValidated,
  kNotSinglyConnected,
  kNoSuchNode,
  kInvalidEvidence,
  kDuplicateEvidence,
  kZeroProbabilityEvidence,
  kNoSuchEvidence,
  kTooLarge,
  kZeroNormalizer,
  kUnobservableFinding,
  kAlreadyObserved,
  kInvalidConfig,
  kInvalidSource,
  kNoSuchSource,
  kSourceExhausted,
  kNoUsableSource,
  kNotTerminated,
  kUnknownCase,
  kNoSuchSession,
  kRevisionConflict,
  kIo,
};

/// Stable wire name, e.g. "ERR_DUPLICATE_EVIDENCE".
std::string_view to_string(ErrorCode code);

/// All engine failures surface as this exception. `subject` names the node,
/// finding, source or session the failure is about (may be empty).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string subject = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string subject_;
  std::string detail_;
};

}  // namespace evr
