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

#ifndef KBNER_PREDICTIONS_H_
#define KBNER_PREDICTIONS_H_

#include <istream>
#include <span>
#include <string>
#include <vector>

#include "kbner/corpus.h"

namespace kbner {

// Spans of one sentence, keyed by an id shared between gold and predictions.
struct SentenceSpans {
  std::string sentence_id;
  std::vector<EntitySpan> spans;

  bool operator==(const SentenceSpans &) const = default;
};

// JSON lines: {"sentence_id": ..., "spans": [{"start","end","label"}...]}.
std::string WritePredictions(std::span<const SentenceSpans> sentences);
// Throws ParseError with the line number.
std::vector<SentenceSpans> ReadPredictions(std::istream &in);

// Gold spans of parsed CoNLL sentences; ids are the 0-based sentence
// ordinals as decimal strings.
std::vector<SentenceSpans> GoldSpans(std::span<const LabeledSentence> data);

}  // namespace kbner

#endif  // KBNER_PREDICTIONS_H_
