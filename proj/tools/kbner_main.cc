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

// kbner command-line entry point.
//
// Exit codes: 0 success, 1 usage error, 2 data or format error, 3 internal
// invariant violation. Diagnostics go to stderr; results to stdout or --out.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "kbner/corpus.h"
#include "kbner/crf.h"
#include "kbner/ensemble.h"
#include "kbner/error.h"
#include "kbner/eval.h"
#include "kbner/index.h"
#include "kbner/pipeline.h"
#include "kbner/predictions.h"
#include "kbner/retrieval.h"
#include "kbner/synthetic.h"

namespace {

using kbner::Error;
using kbner::ErrorCode;
namespace fs = std::filesystem;

const std::vector<std::string> kOptions = {"para", "sent", "sent-nolink"};
const std::vector<std::string> kFields = {"sentence", "title"};

struct RetrievalFlags {
  std::string index;
  bool no_retrieval = false;
  int k = 10;
  int turns = 2;
  std::string option = "para";
  int token_budget = 512;

  void Add(CLI::App *cmd, bool index_required) {
    auto *opt = cmd->add_option("--index", index, "index directory");
    if (index_required) opt->required();
    if (!index_required) {
      cmd->add_flag("--no-retrieval", no_retrieval,
                    "use no contexts (baseline)");
    }
    cmd->add_option("--k", k, "contexts per query")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--turns", turns, "entity-retrieval turns T")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--option", option, "context option")
        ->capture_default_str()
        ->check(CLI::IsMember(kOptions));
    cmd->add_option("--token-budget", token_budget, "token budget")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  kbner::RetrievalConfig Config() const {
    kbner::RetrievalConfig c;
    c.k = k;
    c.turns = turns;
    c.option = kbner::ParseContextOption(option);
    c.token_budget = token_budget;
    return c;
  }

  bool enabled() const { return !no_retrieval; }
};

void Emit(const std::string &out, const std::string &content) {
  if (out.empty() || out == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  const fs::path parent = fs::path(out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream f(out, std::ios::binary);
  f << content;
  if (!f.flush()) throw Error(ErrorCode::kIo, "cannot write " + out);
}

std::vector<kbner::SentenceSpans> LoadPredictions(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return kbner::ReadPredictions(in);
}

kbner::KbIndex LoadIndexIfNeeded(const RetrievalFlags &flags) {
  if (!flags.enabled()) return {};
  if (flags.index.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "--index is required unless --no-retrieval is given");
  }
  return kbner::KbIndex::Load(flags.index);
}

nlohmann::ordered_json ContextToJson(const kbner::RetrievedContext &c) {
  nlohmann::ordered_json j;
  j["rank"] = c.rank;
  j["score"] = c.score;
  j["source_doc_id"] = c.source_doc_id;
  j["title"] = c.title;
  j["text"] = c.text;
  nlohmann::ordered_json anchors = nlohmann::ordered_json::array();
  for (const kbner::Anchor &a : c.anchors) {
    anchors.push_back({{"surface", a.surface},
                       {"target_title", a.target_title},
                       {"start", a.start},
                       {"end", a.end}});
  }
  j["anchors"] = std::move(anchors);
  return j;
}

std::string JoinTokens(const std::vector<std::string> &tokens) {
  std::string out;
  for (const std::string &t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string PrettyReport(const kbner::MetricsReport &r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %9s %9s %9s %6s %6s %6s\n",
                "label", "precision", "recall", "f1", "tp", "pred", "gold");
  out += line;
  for (const auto &[label, s] : r.per_label) {
    std::snprintf(line, sizeof(line),
                  "%-16s %9.4f %9.4f %9.4f %6d %6d %6d\n", label.c_str(),
                  s.precision, s.recall, s.f1, s.counts.true_positive,
                  s.counts.predicted, s.counts.gold);
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "\nmacro F1   %.4f\nmicro P/R/F1 %.4f %.4f %.4f\n"
                "mention F1 %.4f\n",
                r.macro_f1, r.micro_precision, r.micro_recall, r.micro_f1,
                r.mention_f1);
  out += line;
  return out;
}

void ConfigureLogging() {
  auto logger = spdlog::stderr_color_mt("kbner");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char *env = std::getenv("KBNER_LOG")) {
    const std::string level = env;
    if (level == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (level == "warn") {
      spdlog::set_level(spdlog::level::warn);
    } else if (level == "info") {
      spdlog::set_level(spdlog::level::info);
    } else if (level == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else {
      spdlog::warn("ignoring KBNER_LOG={} (expected error|warn|info|debug)",
                   level);
    }
  }
}

}  // namespace

int main(int argc, char **argv) {
  ConfigureLogging();
  CLI::App app{"Knowledge-retrieval NER toolkit"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kbner::kVersion);

  // build-index
  std::string corpus_path, out;
  auto *build = app.add_subcommand("build-index", "index a corpus JSONL");
  build->add_option("--corpus", corpus_path, "corpus JSONL")->required();
  build->add_option("--out", out, "output directory")->required();

  // retrieve
  RetrievalFlags rflags;
  std::string query, input_path, field = "sentence";
  auto *retrieve = app.add_subcommand("retrieve", "query the index");
  rflags.Add(retrieve, true);
  auto *query_opt = retrieve->add_option("--query", query, "query text");
  auto *input_opt = retrieve->add_option(
      "--input", input_path, "CoNLL file; one sentence query per sentence");
  query_opt->excludes(input_opt);
  retrieve->add_option("--field", field, "field to search")
      ->capture_default_str()
      ->check(CLI::IsMember(kFields));
  retrieve->add_option("--out", out, "output file (default stdout)");

  // train
  RetrievalFlags tflags;
  kbner::TrainConfig tc;
  std::string train_path;
  auto *train = app.add_subcommand("train", "train a CRF");
  train->add_option("--train", train_path, "training CoNLL")->required();
  tflags.Add(train, false);
  train->add_option("--epochs", tc.epochs)->capture_default_str();
  train->add_option("--lr", tc.learning_rate)->capture_default_str();
  train->add_option("--l2", tc.l2_lambda)->capture_default_str();
  train->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train->add_option("--seed", tc.seed, "shuffle seed")->capture_default_str();
  train->add_option("--out", out, "model JSON")->required();

  // predict
  RetrievalFlags pflags;
  std::string model_path;
  bool unconstrained = false;
  auto *predict = app.add_subcommand("predict", "tag sentences");
  predict->add_option("--model", model_path, "model JSON")->required();
  predict->add_option("--input", input_path, "CoNLL input")->required();
  pflags.Add(predict, false);
  predict->add_flag("--unconstrained", unconstrained,
                    "decode without the BIO mask");
  predict->add_option("--out", out, "predictions JSONL (default stdout)");

  // ensemble
  std::string mode = "vote";
  std::vector<std::string> inputs;
  double threshold = 0.5;
  RetrievalFlags eflags;
  int threads = 0;
  auto *ensemble = app.add_subcommand("ensemble", "combine predictions");
  ensemble->add_option("--mode", mode, "vote or crf-average")
      ->capture_default_str()
      ->check(CLI::IsMember({"vote", "crf-average"}));
  ensemble->add_option("--preds", inputs,
                       "prediction JSONL files (vote) or models "
                       "(crf-average)")
      ->required();
  ensemble->add_option("--threshold", threshold, "vote fraction to beat")
      ->capture_default_str();
  ensemble->add_option("--input", input_path, "CoNLL input (crf-average)");
  eflags.Add(ensemble, false);
  ensemble->add_option("--out", out, "predictions JSONL (default stdout)");

  // evaluate
  std::string gold_path, pred_path, histogram_path, eval_index;
  int bins = 10;
  bool pretty = false;
  auto *evaluate = app.add_subcommand("evaluate", "score predictions");
  evaluate->add_option("--gold", gold_path, "gold CoNLL")->required();
  evaluate->add_option("--pred", pred_path, "predictions JSONL")->required();
  evaluate->add_option("--index", eval_index,
                       "index for the mention/top-1 title IoU histogram");
  evaluate->add_option("--histogram", histogram_path, "IoU histogram TSV")
      ->needs(evaluate->get_option("--index"));
  evaluate->add_option("--bins", bins)->capture_default_str()->check(
      CLI::PositiveNumber);
  evaluate->add_flag("--pretty", pretty, "human-readable table");
  evaluate->add_option("--out", out, "report JSON (default stdout)");

  // iou-report
  std::string queries_path, iou_index, iou_field = "title";
  int iou_bins = 10;
  auto *iou = app.add_subcommand(
      "iou-report", "character IoU of queries against their top-1 result");
  iou->add_option("--index", iou_index, "index directory")->required();
  auto *queries_opt =
      iou->add_option("--queries", queries_path, "one query per line");
  auto *mentions_opt = iou->add_option(
      "--input", input_path, "CoNLL file; gold mentions are the queries");
  queries_opt->excludes(mentions_opt);
  iou->add_option("--field", iou_field, "field to search")
      ->capture_default_str()
      ->check(CLI::IsMember(kFields));
  iou->add_option("--bins", iou_bins)->capture_default_str()->check(
      CLI::PositiveNumber);
  iou->add_option("--out", out, "TSV (default stdout)");

  // synth
  kbner::SyntheticSpec spec;
  auto *synth = app.add_subcommand("synth", "generate the synthetic benchmark");
  synth->add_option("--entities", spec.entities)->capture_default_str();
  synth->add_option("--docs-per-entity", spec.docs_per_entity)
      ->capture_default_str();
  synth->add_option("--ambiguity", spec.ambiguity)->capture_default_str();
  synth->add_option("--train-sentences", spec.train_sentences)
      ->capture_default_str();
  synth->add_option("--test-sentences", spec.test_sentences)
      ->capture_default_str();
  synth->add_option("--seed", spec.seed)->capture_default_str();
  synth->add_option("--out", out, "output directory")->required();

  // run
  std::string config_path, run_dir;
  auto *run = app.add_subcommand("run", "run a full experiment");
  run->add_option("--config", config_path, "experiment config JSON")
      ->required();
  run->add_option("--run-dir", run_dir, "overrides run_dir in the config");
  run->add_flag("--pretty", pretty, "human-readable table");

  for (CLI::App *cmd : {ensemble, run}) {
    cmd->add_option("--threads", threads, "worker threads (0: all cores)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*build) {
      kbner::BuildIndexFromCorpus(corpus_path).Save(out);
      spdlog::info("index written to {}", out);
    } else if (*retrieve) {
      if (query.empty() && input_path.empty()) {
        std::cerr << "retrieve: one of --query or --input is required\n";
        return 1;
      }
      const kbner::KbIndex index = kbner::KbIndex::Load(rflags.index);
      const kbner::RetrievalConfig config = rflags.Config();
      config.Validate();
      const kbner::Field f = kbner::ParseField(field);
      std::string lines;
      auto emit_hits = [&](const std::string &q, const std::string *sid) {
        std::vector<kbner::ScoredDoc> hits;
        try {
          hits = kbner::Search(index, f, q, config.k);
        } catch (const Error &e) {
          // A batch skips empty queries; a single query reports them.
          if (e.code() != ErrorCode::kEmptyQueryAfterAnalysis || sid == nullptr) {
            throw;
          }
          spdlog::warn("query has no terms: {}", q);
        }
        for (const auto &ctx : kbner::ToContexts(index, hits, config.option)) {
          nlohmann::ordered_json j;
          if (sid != nullptr) j["sentence_id"] = *sid;
          const nlohmann::ordered_json fields = ContextToJson(ctx);
          for (const auto &[key, value] : fields.items()) j[key] = value;
          lines += j.dump();
          lines += '\n';
        }
      };
      if (!query.empty()) {
        emit_hits(query, nullptr);
      } else {
        const auto data = kbner::LoadConll(input_path);
        for (size_t i = 0; i < data.size(); ++i) {
          const std::string sid = std::to_string(i);
          emit_hits(JoinTokens(data[i].tokens()), &sid);
        }
      }
      Emit(out, lines);
    } else if (*train) {
      const kbner::KbIndex index = LoadIndexIfNeeded(tflags);
      const auto data = kbner::LoadConll(train_path);
      const auto examples = kbner::BuildTrainingExamples(
          data, tflags.enabled() ? &index : nullptr, tflags.Config(),
          tflags.enabled());
      const kbner::CrfModel model = kbner::Train(examples, tc);
      kbner::SaveModel(model, out);
      spdlog::info("trained on {} sentences, {} features", data.size(),
                   model.features.size());
    } else if (*predict) {
      const kbner::KbIndex index = LoadIndexIfNeeded(pflags);
      const kbner::CrfModel model = kbner::LoadModel(model_path);
      const auto data = kbner::LoadConll(input_path);
      const kbner::RetrievalConfig config = pflags.Config();
      config.Validate();
      std::vector<kbner::SentenceSpans> preds;
      for (size_t i = 0; i < data.size(); ++i) {
        const kbner::AugmentedInput input = kbner::PrepareInput(
            data[i].tokens(), pflags.enabled() ? &index : nullptr, model,
            config, pflags.enabled(), !unconstrained);
        preds.push_back({std::to_string(i),
                         kbner::PredictSpans(model, input, !unconstrained)});
      }
      Emit(out, kbner::WritePredictions(preds));
    } else if (*ensemble) {
      std::vector<kbner::SentenceSpans> merged;
      if (mode == "vote") {
        std::vector<std::vector<kbner::SentenceSpans>> all;
        for (const std::string &path : inputs) {
          all.push_back(LoadPredictions(path));
        }
        const kbner::VoteConfig vote{threshold};
        vote.Validate();
        for (size_t i = 0; i < all[0].size(); ++i) {
          std::vector<std::vector<kbner::EntitySpan>> per_model;
          for (const auto &file : all) {
            if (file.size() != all[0].size() ||
                file[i].sentence_id != all[0][i].sentence_id) {
              throw Error(ErrorCode::kSentenceIdMismatch,
                          "prediction files list different sentences");
            }
            per_model.push_back(file[i].spans);
          }
          merged.push_back(
              {all[0][i].sentence_id, kbner::MajorityVote(per_model, vote)});
        }
      } else {
        if (input_path.empty()) {
          std::cerr << "ensemble: --input is required for crf-average\n";
          return 1;
        }
        std::vector<kbner::CrfModel> models;
        for (const std::string &path : inputs) {
          models.push_back(kbner::LoadModel(path));
        }
        const kbner::KbIndex index = LoadIndexIfNeeded(eflags);
        const auto data = kbner::LoadConll(input_path);
        const kbner::RetrievalConfig config = eflags.Config();
        config.Validate();
        merged.resize(data.size());
        kbner::ParallelFor(static_cast<int>(data.size()), threads, [&](int i) {
          // Contexts come from the first model's predictions.
          const kbner::AugmentedInput input = kbner::PrepareInput(
              data[i].tokens(), eflags.enabled() ? &index : nullptr,
              models[0], config, eflags.enabled(), true);
          merged[i] = {std::to_string(i),
                       kbner::CrfScoreAverage(models, input, true)};
        });
      }
      Emit(out, kbner::WritePredictions(merged));
    } else if (*evaluate) {
      const auto gold_data = kbner::LoadConll(gold_path);
      const auto gold = kbner::GoldSpans(gold_data);
      const auto report = kbner::EntityF1(gold, LoadPredictions(pred_path));
      Emit(out, pretty ? PrettyReport(report)
                       : kbner::ReportToJson(report).dump(2) + "\n");
      if (!histogram_path.empty()) {
        const kbner::KbIndex index = kbner::KbIndex::Load(eval_index);
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto &sentence : gold_data) {
          for (const auto &span : kbner::SpansFromBio(sentence.tags())) {
            const std::string mention =
                kbner::SpanText(sentence.tokens(), span);
            try {
              const auto hits =
                  kbner::Search(index, kbner::Field::kTitle, mention, 1);
              pairs.emplace_back(mention,
                                 hits.empty()
                                     ? std::string()
                                     : index.doc(hits[0].ordinal).title);
            } catch (const Error &e) {
              if (e.code() != ErrorCode::kEmptyQueryAfterAnalysis) throw;
              pairs.emplace_back(mention, std::string());
            }
          }
        }
        Emit(histogram_path,
             kbner::HistogramToTsv(kbner::IouReport(pairs, bins)));
      }
    } else if (*iou) {
      if (queries_path.empty() && input_path.empty()) {
        std::cerr << "iou-report: one of --queries or --input is required\n";
        return 1;
      }
      const kbner::KbIndex index = kbner::KbIndex::Load(iou_index);
      const kbner::Field f = kbner::ParseField(iou_field);
      std::vector<std::string> queries;
      if (!queries_path.empty()) {
        std::istringstream in(kbner::ReadFile(queries_path));
        for (std::string line; std::getline(in, line);) {
          if (!line.empty()) queries.push_back(line);
        }
      } else {
        for (const auto &sentence : kbner::LoadConll(input_path)) {
          for (const auto &span : kbner::SpansFromBio(sentence.tags())) {
            queries.push_back(kbner::SpanText(sentence.tokens(), span));
          }
        }
      }
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const std::string &q : queries) {
        std::string top;
        try {
          const auto hits = kbner::Search(index, f, q, 1);
          if (!hits.empty()) {
            const auto &doc = index.doc(hits[0].ordinal);
            top = f == kbner::Field::kTitle ? doc.title : doc.sentence;
          }
        } catch (const Error &e) {
          if (e.code() != ErrorCode::kEmptyQueryAfterAnalysis) throw;
        }
        pairs.emplace_back(q, top);
      }
      Emit(out, kbner::HistogramToTsv(kbner::IouReport(pairs, iou_bins)));
    } else if (*synth) {
      const kbner::SyntheticData data = kbner::GenerateSynthetic(spec);
      fs::create_directories(out);
      Emit((fs::path(out) / "corpus.jsonl").string(), data.corpus_jsonl);
      Emit((fs::path(out) / "train.conll").string(), data.train_conll);
      Emit((fs::path(out) / "test.conll").string(), data.test_conll);
    } else if (*run) {
      kbner::ExperimentConfig config = kbner::LoadConfig(config_path);
      if (!run_dir.empty()) config.run_dir = run_dir;
      config.threads = threads;
      const kbner::MetricsReport report = kbner::RunExperiment(config);
      std::cout << (pretty ? PrettyReport(report)
                           : kbner::ReportToJson(report).dump(2) + "\n");
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
