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

#ifndef KBNER_ENSEMBLE_H_
#define KBNER_ENSEMBLE_H_

#include <span>
#include <vector>

#include "kbner/corpus.h"
#include "kbner/crf.h"

namespace kbner {

struct VoteConfig {
  double threshold = 0.5;  // a span needs more than threshold * m votes

  // Throws InvalidArgument unless 0 < threshold < 1.
  void Validate() const;
};

struct SpanVote {
  EntitySpan span;
  int votes = 0;
};

// Vote counts for every distinct (start, end, label) across predictions,
// in candidate order: votes desc, length desc, start asc, label asc.
std::vector<SpanVote> RankSpanVotes(
    std::span<const std::vector<EntitySpan>> predictions);

// Span-level majority voting over the predictions of m models. Candidates
// with more than threshold * m votes are taken in RankSpanVotes order and
// kept unless they overlap an already kept span. Output sorted by start.
std::vector<EntitySpan> MajorityVote(
    std::span<const std::vector<EntitySpan>> predictions,
    const VoteConfig &config);

// Averages the emission matrices (each model scores `input` with its own
// feature map) and the transition scores, then decodes once. Throws
// LabelSetMismatch unless all models share the label set.
std::vector<EntitySpan> CrfScoreAverage(std::span<const CrfModel> models,
                                        const AugmentedInput &input,
                                        bool bio_constrained);

}  // namespace kbner

#endif  // KBNER_ENSEMBLE_H_
