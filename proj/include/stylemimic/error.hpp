#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stylemimic {

enum class ErrorCode {
  kMalformedLine,
  kMissingField,
  kDuplicateId,
  kTooFewAuthors,
  kAuthorTooSmall,
  kEmptyText,
  kTooFewVectors,
  kDimensionMismatch,
  kUnknownAuthor,
  kDegenerateLabels,
  kEmptyCorpus,
  kInsufficientSamples,
  kSingleClassCalibration,
  kTooFewSamples,
  kNoTrainSamplesInAuthor,
  kNoSamples,
  kUnresolvedPlaceholder,
  kUnresolvedInput,
  kTemplateDigestMismatch,
  kHttpError,
  kRateLimited,
  kEmptyCompletion,
  kTimeout,
  kCacheCorrupt,
  kMalformedResponse,
  kZeroVector,
  kDegenerateInput,
  kLengthMismatch,
  kInsufficientEligibleSamples,
  kMissingReference,
  kAuthorSetMismatch,
  kTrainTestLeak,
  kInvalidArgument,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the toolkit. `code()` identifies the failure
/// kind; `what()` carries the human-readable detail (line numbers, ids).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stylemimic
