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

#ifndef KBNER_CRF_H_
#define KBNER_CRF_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kbner/corpus.h"
#include "kbner/features.h"
#include "kbner/retrieval.h"

namespace kbner {

// Ordered BIO tag inventory. "O" is always present, and B-X is present
// whenever I-X is.
class LabelSet {
 public:
  LabelSet() = default;

  // Throws LabelMismatch if the list breaks the invariants above or has
  // duplicates.
  static LabelSet FromLabels(std::vector<std::string> labels);
  // "O" first, then B-X, I-X for every entity type X in sorted order.
  static LabelSet FromTags(std::span<const std::string> tags);

  // Throws LabelMismatch for unknown tags.
  int Index(std::string_view tag) const;
  std::optional<int> Find(std::string_view tag) const;
  const std::string &Label(int index) const { return labels_.at(index); }
  const std::vector<std::string> &labels() const { return labels_; }
  int size() const { return static_cast<int>(labels_.size()); }

  bool operator==(const LabelSet &other) const {
    return labels_ == other.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

// Row-major dense matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(size_t(r) * c, 0.0) {}

  double &operator()(int r, int c) { return data[size_t(r) * cols + c]; }
  double operator()(int r, int c) const { return data[size_t(r) * cols + c]; }
};

// Transition scores b[prev][next] plus the scores out of the start state.
struct Transitions {
  Matrix matrix;  // t x t
  std::vector<double> start;

  int num_labels() const { return matrix.rows; }
};

struct CrfModel {
  static constexpr int kVersion = 1;

  LabelSet labels;
  FeatureMap features;
  Matrix weights;  // features x labels
  Transitions transitions;

  // Zero-initialized model with consistent dimensions.
  static CrfModel Zero(LabelSet labels, FeatureMap features);
  int num_labels() const { return labels.size(); }
};

// Row i holds the emission score of every label for token i:
//   E(i, y) = sum_f W(f, y) * v_i[f].
// Throws DimensionMismatch for feature ids outside the model.
Matrix ScoreEmissions(const CrfModel &model,
                      std::span<const FeatureVector> features);

// start[y_0] + E(0, y_0) + sum_{i>0} b[y_{i-1}][y_i] + E(i, y_i).
double SequenceScore(const Matrix &emissions, const Transitions &transitions,
                     std::span<const int> labels);

// log of the sum over all label sequences of exp(SequenceScore), by the
// forward recursion in log space.
double LogPartition(const Matrix &emissions, const Transitions &transitions);

double LogSumExp(std::span<const double> values);

struct Instance {
  std::vector<FeatureVector> features;
  std::vector<int> gold;
};

struct Gradient {
  Matrix weights;
  Transitions transitions;
};

// Sum over the batch of -log p(gold | x) plus (l2 / 2) * ||theta||^2. When
// `grad` is non-null it receives the gradient (expected minus observed
// feature counts from forward-backward marginals, plus l2 * theta).
double NllAndGradient(const CrfModel &model, std::span<const Instance> batch,
                      double l2, Gradient *grad);

struct Decoded {
  std::vector<int> labels;
  double score = 0.0;
};

// Highest-scoring label sequence; among equal scores the lowest label index
// wins at the latest differing position. With `constrain` set, transitions
// into I-X are only allowed from B-X or I-X.
Decoded Viterbi(const Matrix &emissions, const Transitions &transitions,
                const LabelSet *constrain = nullptr);

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.2;
  double l2_lambda = 1e-4;
  int batch_size = 8;
  uint64_t seed = 42;
  bool bio_constrained = true;  // applies at decode time only

  // Throws InvalidArgument.
  void Validate() const;
};

struct TrainingExample {
  AugmentedInput input;
  std::vector<std::string> tags;
};

// Mini-batch gradient descent from a zero model. Each step applies
//   theta -= lr * (grad_nll(batch) / |batch| + l2 * theta).
// Example order is reshuffled every epoch from `seed`. Throws EmptyDataset
// or LabelMismatch (tags outside `labels` or length mismatch).
CrfModel Train(std::span<const TrainingExample> data,
               const TrainConfig &config,
               const std::optional<LabelSet> &labels = std::nullopt);

// Mean NLL (no regularizer) of `model` over `data`.
double MeanNll(const CrfModel &model, std::span<const Instance> data);

std::vector<std::string> PredictTags(const CrfModel &model,
                                     const AugmentedInput &input,
                                     bool bio_constrained);
std::vector<EntitySpan> PredictSpans(const CrfModel &model,
                                     const AugmentedInput &input,
                                     bool bio_constrained);

// Versioned JSON model file. Throws VersionMismatch or CorruptFile on load.
std::string SerializeModel(const CrfModel &model);
CrfModel DeserializeModel(std::string_view json);
void SaveModel(const CrfModel &model, const std::string &path);
CrfModel LoadModel(const std::string &path);

}  // namespace kbner

#endif  // KBNER_CRF_H_
