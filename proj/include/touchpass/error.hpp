// SPDX-License-Identifier: Apache-2.0
//
// Error type shared by every touchpass module.

#ifndef TOUCHPASS_ERROR_HPP_
#define TOUCHPASS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace touchpass {

enum class ErrorCode {
  kMalformedFile,
  kTooShort,
  kNonMonotonicTime,
  kEmptyDataset,
  kDuplicateKey,
  kAlreadyNormalized,
  kNotNormalized,
  kSubsetEmpty,
  kEmptyTemplate,
  kEmptyCandidates,
  kNonFiniteObjective,
  kMissingSession,
  kImpossiblePairing,
  kDivergedLoss,
  kEmptyPool,
  kEmpty,
  kMissingData,
  kBadLength,
  kModeMismatch,
  kTooManySamples,
  kLabelMismatch,
  kStorageFailure,
  kEmptyCandidateSet,
  kNotEnrolled,
  kLengthMismatch,
  kUnreachableTarget,
  kInvalidArgument,
  kScorerUnavailable,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace touchpass

#endif  // TOUCHPASS_ERROR_HPP_
