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

#include "kbner/ensemble.h"

#include <algorithm>
#include <map>
#include <tuple>

#include "kbner/error.h"

namespace kbner {

void VoteConfig::Validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "vote threshold must be in (0, 1)");
  }
}

std::vector<SpanVote> RankSpanVotes(
    std::span<const std::vector<EntitySpan>> predictions) {
  std::map<EntitySpan, int> counts;
  for (const auto &prediction : predictions) {
    // A model votes at most once for a given span.
    std::vector<EntitySpan> distinct(prediction.begin(), prediction.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    for (const EntitySpan &s : distinct) ++counts[s];
  }
  std::vector<SpanVote> ranked;
  ranked.reserve(counts.size());
  for (const auto &[span, votes] : counts) ranked.push_back({span, votes});
  std::sort(ranked.begin(), ranked.end(),
            [](const SpanVote &a, const SpanVote &b) {
              return std::make_tuple(-a.votes, -a.span.length(), a.span.start,
                                     std::cref(a.span.label)) <
                     std::make_tuple(-b.votes, -b.span.length(), b.span.start,
                                     std::cref(b.span.label));
            });
  return ranked;
}

std::vector<EntitySpan> MajorityVote(
    std::span<const std::vector<EntitySpan>> predictions,
    const VoteConfig &config) {
  config.Validate();
  const double needed = config.threshold * static_cast<double>(predictions.size());
  std::vector<EntitySpan> kept;
  for (const SpanVote &candidate : RankSpanVotes(predictions)) {
    if (!(candidate.votes > needed)) continue;
    const bool clash = std::any_of(
        kept.begin(), kept.end(),
        [&](const EntitySpan &s) { return s.Overlaps(candidate.span); });
    if (!clash) kept.push_back(candidate.span);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<EntitySpan> CrfScoreAverage(std::span<const CrfModel> models,
                                        const AugmentedInput &input,
                                        bool bio_constrained) {
  if (models.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no models to average");
  }
  const CrfModel &first = models.front();
  const int t = first.num_labels();
  const int n = static_cast<int>(input.tokens.size());
  Matrix emissions(n, t);
  Transitions transitions;
  transitions.matrix = Matrix(t, t);
  transitions.start.assign(t, 0.0);

  for (const CrfModel &model : models) {
    if (!(model.labels == first.labels)) {
      throw Error(ErrorCode::kLabelSetMismatch,
                  "models disagree on the label set");
    }
    const Matrix em = ScoreEmissions(model, ExtractFeatures(input, model.features));
    for (size_t i = 0; i < em.data.size(); ++i) emissions.data[i] += em.data[i];
    for (size_t i = 0; i < transitions.matrix.data.size(); ++i) {
      transitions.matrix.data[i] += model.transitions.matrix.data[i];
    }
    for (int y = 0; y < t; ++y) {
      transitions.start[y] += model.transitions.start[y];
    }
  }
  const double m = static_cast<double>(models.size());
  for (double &v : emissions.data) v /= m;
  for (double &v : transitions.matrix.data) v /= m;
  for (double &v : transitions.start) v /= m;

  const Decoded best = Viterbi(emissions, transitions,
                               bio_constrained ? &first.labels : nullptr);
  std::vector<std::string> tags;
  for (int y : best.labels) tags.push_back(first.labels.Label(y));
  return SpansFromBio(tags);
}

}  // namespace kbner
