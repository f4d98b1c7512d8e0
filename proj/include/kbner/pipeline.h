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

#ifndef KBNER_PIPELINE_H_
#define KBNER_PIPELINE_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "kbner/corpus.h"
#include "kbner/crf.h"
#include "kbner/eval.h"
#include "kbner/index.h"
#include "kbner/predictions.h"
#include "kbner/retrieval.h"

namespace kbner {

inline constexpr char kVersion[] = "1.0.0";

struct ExperimentConfig {
  std::string corpus_path;  // used when index_dir is empty
  std::string index_dir;
  std::string train_path;
  std::string test_path;
  std::string run_dir;
  bool use_retrieval = true;
  RetrievalConfig retrieval;
  TrainConfig train;
  int ensemble_size = 1;  // seeds train.seed ... train.seed + m - 1
  double vote_threshold = 0.5;
  int threads = 0;  // 0: hardware concurrency; never affects outputs

  // Throws InvalidArgument. Does not touch the filesystem.
  void Validate() const;
};

// `threads` is a runtime knob and is left out.
nlohmann::ordered_json ConfigToJson(const ExperimentConfig &config);
// Throws ParseError for missing or mistyped fields.
ExperimentConfig ConfigFromJson(const nlohmann::json &json);
ExperimentConfig LoadConfig(const std::string &path);

// Training inputs. Without retrieval every sentence gets no context. With
// turns == 0 the contexts come from sentence retrieval; otherwise from
// entity retrieval on the gold mentions.
std::vector<TrainingExample> BuildTrainingExamples(
    std::span<const LabeledSentence> data, const KbIndex *index,
    const RetrievalConfig &config, bool use_retrieval);

// The input a model sees at prediction time. With turns > 0 the model's own
// predictions drive the entity queries.
AugmentedInput PrepareInput(std::span<const std::string> tokens,
                            const KbIndex *index, const CrfModel &model,
                            const RetrievalConfig &config, bool use_retrieval,
                            bool bio_constrained);

struct ExperimentResult {
  std::vector<uint64_t> seeds;
  std::vector<CrfModel> models;  // ordered by seed
  std::vector<std::vector<SentenceSpans>> model_predictions;
  std::vector<SentenceSpans> ensemble_predictions;
  std::vector<MetricsReport> model_reports;
  MetricsReport ensemble_report;
  double mean_model_macro_f1 = 0.0;
};

// Everything in memory; `index` may be null when retrieval is off.
ExperimentResult RunInMemory(const KbIndex *index,
                             std::span<const LabeledSentence> train,
                             std::span<const LabeledSentence> test,
                             const ExperimentConfig &config);

nlohmann::ordered_json ResultToJson(const ExperimentResult &result);

// Runs the experiment and writes config.json, models/seed-*.json,
// preds/seed-*.jsonl, ensemble.jsonl and report.json under run_dir.
// Returns the ensemble report.
MetricsReport RunExperiment(const ExperimentConfig &config);

// Writes `content` to `path` unless the file already holds exactly that
// content. Throws Io if it holds anything else.
void WriteOnce(const std::string &path, const std::string &content);

std::string ReadFile(const std::string &path);
std::vector<LabeledSentence> LoadConll(const std::string &path);
KbIndex BuildIndexFromCorpus(const std::string &corpus_path);

// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
// concurrency). The first exception is rethrown after all workers stop.
void ParallelFor(int n, int threads, const std::function<void(int)> &fn);

}  // namespace kbner

#endif  // KBNER_PIPELINE_H_
