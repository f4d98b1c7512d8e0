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

#include "kbner/pipeline.h"

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "kbner/checksum.h"
#include "kbner/ensemble.h"
#include "kbner/error.h"

namespace kbner {

namespace fs = std::filesystem;

namespace {

// Prefixes data errors with the stage that raised them.
template <typename Fn>
auto Staged(const char *stage, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error &e) {
    throw Error(e.code(), std::string(stage) + ": " + e.detail());
  }
}

template <typename T>
T Require(const nlohmann::json &json, const char *key) {
  if (!json.contains(key)) {
    throw Error(ErrorCode::kParseError, std::string("config: missing ") + key);
  }
  try {
    return json.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw Error(ErrorCode::kParseError,
                std::string("config: wrong type for ") + key);
  }
}

template <typename T>
T Optional(const nlohmann::json &json, const char *key, T fallback) {
  return json.contains(key) ? Require<T>(json, key) : fallback;
}

std::vector<std::string> GoldMentions(const LabeledSentence &sentence) {
  std::vector<std::string> mentions;
  for (const EntitySpan &span : SpansFromBio(sentence.tags())) {
    std::string text = SpanText(sentence.tokens(), span);
    if (std::find(mentions.begin(), mentions.end(), text) == mentions.end()) {
      mentions.push_back(std::move(text));
    }
  }
  return mentions;
}

std::string SeedName(uint64_t seed) { return "seed-" + std::to_string(seed); }

}  // namespace

void ExperimentConfig::Validate() const {
  if (ensemble_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "ensemble size must be >= 1");
  }
  VoteConfig{vote_threshold}.Validate();
  if (threads < 0) {
    throw Error(ErrorCode::kInvalidArgument, "threads must be >= 0");
  }
  retrieval.Validate();
  train.Validate();
}

nlohmann::ordered_json ConfigToJson(const ExperimentConfig &config) {
  nlohmann::ordered_json j;
  j["corpus"] = config.corpus_path;
  j["index_dir"] = config.index_dir;
  j["train"] = config.train_path;
  j["test"] = config.test_path;
  j["run_dir"] = config.run_dir;
  j["use_retrieval"] = config.use_retrieval;
  j["retrieval"] = {
      {"k", config.retrieval.k},
      {"turns", config.retrieval.turns},
      {"option", std::string(ContextOptionName(config.retrieval.option))},
      {"token_budget", config.retrieval.token_budget}};
  j["training"] = {{"epochs", config.train.epochs},
                   {"learning_rate", config.train.learning_rate},
                   {"l2_lambda", config.train.l2_lambda},
                   {"batch_size", config.train.batch_size},
                   {"seed", config.train.seed},
                   {"bio_constrained", config.train.bio_constrained}};
  j["ensemble_size"] = config.ensemble_size;
  j["vote_threshold"] = config.vote_threshold;
  return j;
}

ExperimentConfig ConfigFromJson(const nlohmann::json &json) {
  if (!json.is_object()) {
    throw Error(ErrorCode::kParseError, "config: expected an object");
  }
  ExperimentConfig c;
  c.corpus_path = Optional<std::string>(json, "corpus", "");
  c.index_dir = Optional<std::string>(json, "index_dir", "");
  c.train_path = Require<std::string>(json, "train");
  c.test_path = Require<std::string>(json, "test");
  c.run_dir = Optional<std::string>(json, "run_dir", "");
  c.use_retrieval = Optional<bool>(json, "use_retrieval", true);
  if (json.contains("retrieval")) {
    const auto &r = json.at("retrieval");
    c.retrieval.k = Optional<int>(r, "k", c.retrieval.k);
    c.retrieval.turns = Optional<int>(r, "turns", c.retrieval.turns);
    c.retrieval.option = ParseContextOption(Optional<std::string>(
        r, "option", std::string(ContextOptionName(c.retrieval.option))));
    c.retrieval.token_budget =
        Optional<int>(r, "token_budget", c.retrieval.token_budget);
  }
  if (json.contains("training")) {
    const auto &t = json.at("training");
    c.train.epochs = Optional<int>(t, "epochs", c.train.epochs);
    c.train.learning_rate =
        Optional<double>(t, "learning_rate", c.train.learning_rate);
    c.train.l2_lambda = Optional<double>(t, "l2_lambda", c.train.l2_lambda);
    c.train.batch_size = Optional<int>(t, "batch_size", c.train.batch_size);
    c.train.seed = Optional<uint64_t>(t, "seed", c.train.seed);
    c.train.bio_constrained =
        Optional<bool>(t, "bio_constrained", c.train.bio_constrained);
  }
  c.ensemble_size = Optional<int>(json, "ensemble_size", c.ensemble_size);
  c.vote_threshold = Optional<double>(json, "vote_threshold", c.vote_threshold);
  return c;
}

ExperimentConfig LoadConfig(const std::string &path) {
  const std::string text = ReadFile(path);
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  return ConfigFromJson(json);
}

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteOnce(const std::string &path, const std::string &content) {
  if (fs::exists(path)) {
    if (ReadFile(path) == content) return;
    throw Error(ErrorCode::kIo,
                path + " already exists with different content");
  }
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out.flush()) throw Error(ErrorCode::kIo, "cannot write " + path);
}

std::vector<LabeledSentence> LoadConll(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return ParseConll(in);
}

KbIndex BuildIndexFromCorpus(const std::string &corpus_path) {
  std::ifstream in(corpus_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + corpus_path);
  return KbIndex::Build(IngestCorpus(in));
}

void ParallelFor(int n, int threads, const std::function<void(int)> &fn) {
  if (threads <= 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  const int workers = std::min(threads, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread &t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<TrainingExample> BuildTrainingExamples(
    std::span<const LabeledSentence> data, const KbIndex *index,
    const RetrievalConfig &config, bool use_retrieval) {
  config.Validate();
  if (use_retrieval && index == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "retrieval needs an index");
  }
  std::vector<TrainingExample> examples;
  examples.reserve(data.size());
  for (const LabeledSentence &sentence : data) {
    std::vector<RetrievedContext> contexts;
    if (use_retrieval) {
      if (config.turns == 0) {
        contexts = ToContexts(
            *index, SentenceRetrieve(*index, sentence.tokens(), config.k),
            config.option);
      } else {
        contexts = MentionRetrieve(*index, sentence.tokens(),
                                   GoldMentions(sentence), config);
      }
    }
    examples.push_back({Augment(sentence.tokens(), std::move(contexts),
                                config.token_budget),
                        sentence.tags()});
  }
  return examples;
}

AugmentedInput PrepareInput(std::span<const std::string> tokens,
                            const KbIndex *index, const CrfModel &model,
                            const RetrievalConfig &config, bool use_retrieval,
                            bool bio_constrained) {
  if (!use_retrieval) return Augment(tokens, {}, config.token_budget);
  if (index == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "retrieval needs an index");
  }
  const Predictor predictor = [&](const AugmentedInput &input) {
    return PredictSpans(model, input, bio_constrained);
  };
  IterativeResult result = IterativeRetrieve(*index, tokens, predictor, config);
  return Augment(tokens, std::move(result.contexts), config.token_budget);
}

ExperimentResult RunInMemory(const KbIndex *index,
                             std::span<const LabeledSentence> train,
                             std::span<const LabeledSentence> test,
                             const ExperimentConfig &config) {
  config.Validate();
  const std::vector<TrainingExample> examples = Staged("featurize", [&] {
    return BuildTrainingExamples(train, index, config.retrieval,
                                 config.use_retrieval);
  });
  const int m = config.ensemble_size;
  ExperimentResult result;
  for (int s = 0; s < m; ++s) {
    result.seeds.push_back(config.train.seed + static_cast<uint64_t>(s));
  }
  result.models.resize(m);
  result.model_predictions.resize(m);
  // Seeds run in parallel; each writes only its own slot.
  ParallelFor(m, config.threads, [&](int s) {
    TrainConfig tc = config.train;
    tc.seed = result.seeds[s];
    result.models[s] = Staged("train", [&] { return Train(examples, tc); });
    auto &preds = result.model_predictions[s];
    preds.reserve(test.size());
    Staged("predict", [&] {
      for (size_t i = 0; i < test.size(); ++i) {
        const AugmentedInput input =
            PrepareInput(test[i].tokens(), index, result.models[s],
                         config.retrieval, config.use_retrieval,
                         tc.bio_constrained);
        preds.push_back({std::to_string(i),
                         PredictSpans(result.models[s], input,
                                      tc.bio_constrained)});
      }
    });
  });

  const VoteConfig vote{config.vote_threshold};
  Staged("ensemble", [&] {
    for (size_t i = 0; i < test.size(); ++i) {
      std::vector<std::vector<EntitySpan>> per_model;
      for (int s = 0; s < m; ++s) {
        per_model.push_back(result.model_predictions[s][i].spans);
      }
      result.ensemble_predictions.push_back(
          {std::to_string(i), MajorityVote(per_model, vote)});
    }
  });

  Staged("evaluate", [&] {
    const std::vector<SentenceSpans> gold = GoldSpans(test);
    double sum = 0.0;
    for (int s = 0; s < m; ++s) {
      result.model_reports.push_back(
          EntityF1(gold, result.model_predictions[s]));
      sum += result.model_reports.back().macro_f1;
    }
    result.mean_model_macro_f1 = sum / m;
    result.ensemble_report = EntityF1(gold, result.ensemble_predictions);
  });
  return result;
}

nlohmann::ordered_json ResultToJson(const ExperimentResult &result) {
  nlohmann::ordered_json j;
  j["ensemble"] = ReportToJson(result.ensemble_report);
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (size_t s = 0; s < result.seeds.size(); ++s) {
    nlohmann::ordered_json entry;
    entry["seed"] = result.seeds[s];
    entry["metrics"] = ReportToJson(result.model_reports[s]);
    models.push_back(std::move(entry));
  }
  j["models"] = std::move(models);
  j["mean_model_macro_f1"] = result.mean_model_macro_f1;
  return j;
}

MetricsReport RunExperiment(const ExperimentConfig &config) {
  config.Validate();
  if (config.run_dir.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "run_dir is required");
  }
  for (const std::string *path : {&config.train_path, &config.test_path}) {
    if (!fs::exists(*path)) {
      throw Error(ErrorCode::kIo, "missing input " + *path);
    }
  }
  if (config.use_retrieval && config.index_dir.empty() &&
      !fs::exists(config.corpus_path)) {
    throw Error(ErrorCode::kIo, "missing corpus " + config.corpus_path);
  }
  const fs::path run(config.run_dir);

  const std::string train_text = ReadFile(config.train_path);
  const std::string test_text = ReadFile(config.test_path);
  nlohmann::ordered_json meta;
  meta["version"] = {{"kbner", kVersion},
                     {"index_format", KbIndex::kFormatVersion},
                     {"model_format", CrfModel::kVersion}};
  meta["config"] = ConfigToJson(config);
  meta["checksums"]["train"] = Crc32Hex(train_text);
  meta["checksums"]["test"] = Crc32Hex(test_text);
  if (config.use_retrieval) {
    if (config.index_dir.empty()) {
      meta["checksums"]["corpus"] = Crc32Hex(ReadFile(config.corpus_path));
    } else {
      meta["checksums"]["index_manifest"] = Crc32Hex(
          ReadFile((fs::path(config.index_dir) / "manifest.json").string()));
    }
  }
  WriteOnce((run / "config.json").string(), meta.dump(2) + "\n");

  KbIndex index;
  if (config.use_retrieval) {
    index = Staged("index", [&] {
      return config.index_dir.empty() ? BuildIndexFromCorpus(config.corpus_path)
                                      : KbIndex::Load(config.index_dir);
    });
  }
  std::vector<LabeledSentence> train, test;
  Staged("data", [&] {
    std::istringstream train_in(train_text), test_in(test_text);
    train = ParseConll(train_in);
    test = ParseConll(test_in);
  });

  const ExperimentResult result = RunInMemory(
      config.use_retrieval ? &index : nullptr, train, test, config);

  for (size_t s = 0; s < result.seeds.size(); ++s) {
    const std::string name = SeedName(result.seeds[s]);
    WriteOnce((run / "models" / (name + ".json")).string(),
              SerializeModel(result.models[s]));
    WriteOnce((run / "preds" / (name + ".jsonl")).string(),
              WritePredictions(result.model_predictions[s]));
  }
  WriteOnce((run / "ensemble.jsonl").string(),
            WritePredictions(result.ensemble_predictions));
  WriteOnce((run / "report.json").string(),
            ResultToJson(result).dump(2) + "\n");
  return result.ensemble_report;
}

}  // namespace kbner
