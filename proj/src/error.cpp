// SPDX-License-Identifier: Apache-2.0

#include "touchpass/error.hpp"

namespace touchpass {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kNonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kDuplicateKey: return "DuplicateKey";
    case ErrorCode::kAlreadyNormalized: return "AlreadyNormalized";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kSubsetEmpty: return "SubsetEmpty";
    case ErrorCode::kEmptyTemplate: return "EmptyTemplate";
    case ErrorCode::kEmptyCandidates: return "EmptyCandidates";
    case ErrorCode::kNonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::kMissingSession: return "MissingSession";
    case ErrorCode::kImpossiblePairing: return "ImpossiblePairing";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kMissingData: return "MissingData";
    case ErrorCode::kBadLength: return "BadLength";
    case ErrorCode::kModeMismatch: return "ModeMismatch";
    case ErrorCode::kTooManySamples: return "TooManySamples";
    case ErrorCode::kLabelMismatch: return "LabelMismatch";
    case ErrorCode::kStorageFailure: return "StorageFailure";
    case ErrorCode::kEmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::kNotEnrolled: return "NotEnrolled";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kUnreachableTarget: return "UnreachableTarget";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kScorerUnavailable: return "ScorerUnavailable";
  }
  return "Unknown";
}

}  // namespace touchpass
