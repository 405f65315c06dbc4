#include "stylemimic/error.hpp"

namespace stylemimic {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kTooFewAuthors: return "TooFewAuthors";
    case ErrorCode::kAuthorTooSmall: return "AuthorTooSmall";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kTooFewVectors: return "TooFewVectors";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnknownAuthor: return "UnknownAuthor";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kSingleClassCalibration: return "SingleClassCalibration";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kNoTrainSamplesInAuthor: return "NoTrainSamplesInAuthor";
    case ErrorCode::kNoSamples: return "NoSamples";
    case ErrorCode::kUnresolvedPlaceholder: return "UnresolvedPlaceholder";
    case ErrorCode::kUnresolvedInput: return "UnresolvedInput";
    case ErrorCode::kTemplateDigestMismatch: return "TemplateDigestMismatch";
    case ErrorCode::kHttpError: return "HttpError";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kEmptyCompletion: return "EmptyCompletion";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kCacheCorrupt: return "CacheCorrupt";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInsufficientEligibleSamples: return "InsufficientEligibleSamples";
    case ErrorCode::kMissingReference: return "MissingReference";
    case ErrorCode::kAuthorSetMismatch: return "AuthorSetMismatch";
    case ErrorCode::kTrainTestLeak: return "TrainTestLeak";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace stylemimic
