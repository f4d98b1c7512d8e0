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

#ifndef KBNER_ERROR_H_
#define KBNER_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace kbner {

// Every data-level failure in the library is reported as kbner::Error with
// one of these codes. Logic errors (broken internal invariants) use
// std::logic_error instead.
enum class ErrorCode {
  kMalformedMarkup,
  kInconsistentAnchor,
  kParseError,
  kDuplicateId,
  kBadTag,
  kEmptySentence,
  kOverlapError,
  kUnknownDocument,
  kEmptyQueryAfterAnalysis,
  kNoMentions,
  kBudgetTooSmall,
  kInvalidArgument,
  kEmptyDataset,
  kLabelMismatch,
  kVersionMismatch,
  kCorruptFile,
  kLabelSetMismatch,
  kSentenceIdMismatch,
  kDimensionMismatch,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const { return code_; }
  // The message without the code prefix.
  const std::string &detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace kbner

#endif  // KBNER_ERROR_H_
