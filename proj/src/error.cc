// Copyright 2026 The kbner Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kbner/error.h"

namespace kbner {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedMarkup: return "MalformedMarkup";
    case ErrorCode::kInconsistentAnchor: return "InconsistentAnchor";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kBadTag: return "BadTag";
    case ErrorCode::kEmptySentence: return "EmptySentence";
    case ErrorCode::kOverlapError: return "OverlapError";
    case ErrorCode::kUnknownDocument: return "UnknownDocument";
    case ErrorCode::kEmptyQueryAfterAnalysis: return "EmptyQueryAfterAnalysis";
    case ErrorCode::kNoMentions: return "NoMentions";
    case ErrorCode::kBudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kLabelMismatch: return "LabelMismatch";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kLabelSetMismatch: return "LabelSetMismatch";
    case ErrorCode::kSentenceIdMismatch: return "SentenceIdMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace kbner
