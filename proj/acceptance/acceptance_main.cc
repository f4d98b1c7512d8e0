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

// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kbner/corpus.h"
#include "kbner/crf.h"
#include "kbner/ensemble.h"
#include "kbner/eval.h"
#include "kbner/index.h"
#include "kbner/pipeline.h"
#include "kbner/random.h"
#include "kbner/retrieval.h"
#include "kbner/synthetic.h"
#include "kbner/utf8.h"
#include "oracles.h"

namespace {

using namespace kbner;
namespace fs = std::filesystem;
using Spans = std::vector<EntitySpan>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

template <typename... Args>
std::string Format(const char *fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// 1. Viterbi against enumeration. Odd trials use integer scores, so exact
// ties exercise the tie rule.
Outcome ViterbiOracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  int bad_path = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.Below(6));
    const int t = 1 + static_cast<int>(rng.Below(4));
    const auto inst = oracle::RandomInstance(rng, n, t, trial % 2 == 1);
    const Decoded got = Viterbi(inst.emissions, inst.transitions);
    const oracle::Best want = oracle::Argmax(inst.emissions, inst.transitions);
    if (got.labels != want.labels) ++bad_path;
    worst = std::max(worst, std::abs(got.score - want.score));
  }
  const double secs = Seconds(t0);
  return {bad_path == 0 && worst <= 1e-9 && secs < 10.0,
          Format("200 instances, path mismatches %d, max |score diff| %.3g, "
                 "%.2fs",
                 bad_path, worst, secs)};
}

// 2. Gradient against central finite differences.
Outcome GradientCheck() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2002);
  double worst = 0.0;
  const double l2 = 0.1;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.Below(6));
    const int t = 2 + static_cast<int>(rng.Below(3));
    const auto mi = oracle::RandomModelInstance(rng, n, t, 6);
    Gradient grad;
    const std::vector<Instance> batch{mi.instance};
    NllAndGradient(mi.model, batch, l2, &grad);
    std::vector<double> analytic = grad.weights.data;
    analytic.insert(analytic.end(), grad.transitions.matrix.data.begin(),
                    grad.transitions.matrix.data.end());
    analytic.insert(analytic.end(), grad.transitions.start.begin(),
                    grad.transitions.start.end());
    const auto numeric =
        oracle::FiniteDifferenceGradient(mi.model, mi.instance, l2, 1e-6);
    for (size_t i = 0; i < analytic.size(); ++i) {
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
  }
  const double secs = Seconds(t0);
  return {worst < 1e-4 && secs < 30.0,
          Format("50 instances, max relative error %.3g (denominator floor "
                 "1e-8), %.2fs",
                 worst, secs)};
}

// 3. Probabilities over all sequences sum to one.
Outcome Normalization() {
  Rng rng(3003);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.Below(5));
    const int t = 1 + static_cast<int>(rng.Below(4));
    const auto inst = oracle::RandomInstance(rng, n, t, false);
    const double log_z = LogPartition(inst.emissions, inst.transitions);
    double total = 0.0;
    oracle::ForEachSequence(n, t, [&](const std::vector<int> &y) {
      total += std::exp(SequenceScore(inst.emissions, inst.transitions, y) -
                        log_z);
    });
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return {worst <= 1e-9,
          Format("200 instances (n<=5, t<=4), max |sum p - 1| %.3g", worst)};
}

// 4. BM25 search against brute-force scoring of every document.
Outcome Bm25Oracle() {
  Rng rng(4004);
  const std::vector<std::string> vocab = {
      "alpha", "beta", "gamma", "delta", "eps",   "zeta",    "eta", "theta",
      "iota",  "kappa", "lambda", "mu",  "nu",    "xi",      "omicron", "pi"};
  int queries = 0, mismatches = 0;
  double worst = 0.0;
  for (int corpus = 0; corpus < 25; ++corpus) {
    const size_t size = 1 + rng.Below(200);
    // Even corpora draw from 4 words, so identical documents (ties) abound.
    const size_t words = corpus % 2 == 0 ? 4 : vocab.size();
    std::vector<KbDocument> docs;
    for (size_t d = 0; d < size; ++d) {
      KbDocument doc;
      doc.doc_id = Format("d%03zu#%zu", rng.Below(1000), d);
      const size_t len = 1 + rng.Below(8);
      for (size_t w = 0; w < len; ++w) {
        if (w > 0) doc.sentence += ' ';
        doc.sentence += vocab[rng.Below(words)];
      }
      doc.title = vocab[rng.Below(words)];
      doc.paragraph_plain = doc.paragraph_marked = doc.sentence;
      doc.sentence_end = utf8::Length(doc.sentence);
      doc.language = "en";
      docs.push_back(doc);
    }
    const KbIndex index = KbIndex::Build(docs);
    for (int q = 0; q < 20; ++q) {
      std::string query;
      const size_t len = 1 + rng.Below(4);
      for (size_t w = 0; w < len; ++w) {
        if (w > 0) query += ' ';
        query += vocab[rng.Below(vocab.size())];
      }
      const int k = 1 + static_cast<int>(rng.Below(15));
      for (Field field : {Field::kSentence, Field::kTitle}) {
        ++queries;
        const auto got = Search(index, field, query, k);
        const auto want = oracle::BruteForceSearch(docs, field, query, k);
        bool same = got.size() == want.size();
        for (size_t i = 0; same && i < got.size(); ++i) {
          same = got[i].doc_id == want[i].doc_id &&
                 got[i].rank == static_cast<int>(i) + 1;
          worst = std::max(worst, std::abs(got[i].score - want[i].score));
        }
        if (!same) ++mismatches;
      }
    }
  }
  return {mismatches == 0 && worst <= 1e-9,
          Format("%d queries over 25 corpora, ranking mismatches %d, max "
                 "|score diff| %.3g",
                 queries, mismatches, worst)};
}

Spans RandomPrediction(Rng &rng, int n) {
  Spans spans;
  int i = 0;
  while (i < n) {
    if (rng.Bernoulli(0.4)) {
      const int len = 1 + static_cast<int>(rng.Below(3));
      const int end = std::min(n, i + len);
      spans.push_back({i, end, rng.Bernoulli(0.5) ? "A" : "B"});
      i = end;
    } else {
      ++i;
    }
  }
  return spans;
}

// 5. The three worked examples and the voting properties.
Outcome Voting() {
  std::vector<std::string> failed;
  {
    const EntitySpan s{0, 2, "PER"};
    if (MajorityVote(std::vector<Spans>{{s}, {s}, {}}, {0.5}) != Spans{s}) {
      failed.push_back("two-of-three");
    }
  }
  // The next two examples need models that vote for both overlapping spans,
  // which the function accepts even though real decoders never produce it.
  {
    const EntitySpan a{0, 2, "PER"}, b{0, 4, "ORG"};
    if (MajorityVote(std::vector<Spans>{{a, b}, {a, b}, {a}}, {0.5}) !=
        Spans{a}) {
      failed.push_back("more-votes");
    }
  }
  {
    const EntitySpan a{0, 2, "PER"}, b{0, 3, "ORG"};
    if (MajorityVote(std::vector<Spans>{{a, b}, {a}, {b}}, {0.5}) !=
        Spans{b}) {
      failed.push_back("longer-span");
    }
  }

  Rng rng(5005);
  int overlap = 0, under = 0, order = 0, monotone = 0, unanimous = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = 1 + static_cast<int>(rng.Below(7));
    const int n = 2 + static_cast<int>(rng.Below(10));
    std::vector<Spans> preds;
    for (int j = 0; j < m; ++j) preds.push_back(RandomPrediction(rng, n));
    const double threshold = rng.Uniform(0.05, 0.95);
    const Spans out = MajorityVote(preds, {threshold});

    for (size_t i = 0; i < out.size(); ++i) {
      for (size_t j = i + 1; j < out.size(); ++j) {
        if (out[i].Overlaps(out[j])) ++overlap;
      }
      int votes = 0;
      for (const Spans &p : preds) {
        votes += std::count(p.begin(), p.end(), out[i]) > 0;
      }
      if (!(votes > threshold * m)) ++under;
    }

    std::vector<Spans> shuffled = preds;
    rng.Shuffle(shuffled);
    if (MajorityVote(shuffled, {threshold}) != out) ++order;

    Spans previous = MajorityVote(preds, {0.05});
    for (double th = 0.15; th < 0.96; th += 0.1) {
      const Spans now = MajorityVote(preds, {th});
      if (now.size() > previous.size()) ++monotone;
      previous = now;
    }

    if (m % 2 == 1) {
      const Spans half = MajorityVote(preds, {0.5});
      for (const EntitySpan &s : preds[0]) {
        const bool all = std::all_of(preds.begin(), preds.end(), [&](const Spans &p) {
          return std::count(p.begin(), p.end(), s) > 0;
        });
        if (all && std::count(half.begin(), half.end(), s) == 0) ++unanimous;
      }
    }
  }
  if (overlap) failed.push_back("non-overlap");
  if (under) failed.push_back("threshold");
  if (order) failed.push_back("order-invariance");
  if (monotone) failed.push_back("monotonicity");
  if (unanimous) failed.push_back("unanimous");
  std::string detail = "3 examples + 2000 random trials";
  for (const auto &f : failed) detail += ", failed " + f;
  return {failed.empty(), detail};
}

std::string RandomString(Rng &rng) {
  static const std::vector<std::string> alphabet = {"a", "b", "c", " ", "é",
                                                    "乔", "ब", "a", "b"};
  std::string s;
  const size_t len = rng.Below(8);
  for (size_t i = 0; i < len; ++i) s += rng.Pick(alphabet);
  return s;
}

// 6. Character IoU.
Outcome Iou() {
  std::vector<std::string> failed;
  if (CharIou("steve jobs", "steve jobs") != 1.0) failed.push_back("identical");
  if (CharIou("abc", "xyz") != 0.0) failed.push_back("disjoint");
  if (CharIou("aab", "ab") != 2.0 / 3.0) failed.push_back("aab/ab");
  Rng rng(6006);
  int asym = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string a = RandomString(rng), b = RandomString(rng);
    if (CharIou(a, b) != CharIou(b, a)) ++asym;
  }
  if (asym) failed.push_back("symmetry");
  std::string detail = Format("3 hand cases, 1000 random pairs, asymmetric %d", asym);
  for (const auto &f : failed) detail += ", failed " + f;
  return {failed.empty(), detail};
}

struct Benchmark {
  SyntheticData data;
  KbIndex index;
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> test;
};

Benchmark MakeBenchmark(uint64_t seed) {
  SyntheticSpec spec;
  spec.entities = 50;
  spec.ambiguity = 0.5;
  spec.train_sentences = 500;
  spec.test_sentences = 200;
  spec.seed = seed;
  Benchmark b;
  b.data = GenerateSynthetic(spec);
  std::istringstream corpus(b.data.corpus_jsonl), train(b.data.train_conll),
      test(b.data.test_conll);
  b.index = KbIndex::Build(IngestCorpus(corpus));
  b.train = ParseConll(train);
  b.test = ParseConll(test);
  return b;
}

ExperimentConfig BenchmarkConfig(bool use_retrieval) {
  ExperimentConfig config;  // library defaults: k=10, T=2, para, budget 512
  config.use_retrieval = use_retrieval;
  config.threads = 1;
  return config;
}

// 7. Retrieval beats the no-retrieval baseline.
Outcome RetrievalBenefit(std::map<uint64_t, Benchmark> &benchmarks,
                         CrfModel *seed42_model) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  for (uint64_t seed : {42, 43, 44}) {
    const Benchmark &b = benchmarks.at(seed);
    const auto with = RunInMemory(&b.index, b.train, b.test, BenchmarkConfig(true));
    const auto without = RunInMemory(nullptr, b.train, b.test, BenchmarkConfig(false));
    const double gap =
        100.0 * (with.ensemble_report.macro_f1 - without.ensemble_report.macro_f1);
    if (seed == 42) {
      pass = pass && gap >= 10.0;
      *seed42_model = with.models[0];
    }
    pass = pass && gap > 0.0;
    detail += Format("seed %lu: %.2f vs %.2f (gap %+.2f); ",
                     static_cast<unsigned long>(seed),
                     100.0 * with.ensemble_report.macro_f1,
                     100.0 * without.ensemble_report.macro_f1, gap);
  }
  const double secs = Seconds(t0);
  detail += Format("%.1fs", secs);
  return {pass && secs < 300.0, detail};
}

// 8. Top-1 hit rate: gold-mention entity retrieval vs sentence retrieval vs
// T=2 retrieval driven by the model's own predictions.
Outcome IterativeHitRate(const Benchmark &b, const CrfModel &model) {
  std::map<std::string, std::string> title_of;
  for (const SyntheticEntity &e : b.data.entities) title_of[e.surface] = e.title;
  RetrievalConfig config;  // k=10, T=2
  int sentences = 0, gold_hits = 0, sentence_hits = 0, predicted_hits = 0;
  const Predictor predictor = [&](const AugmentedInput &input) {
    return PredictSpans(model, input, true);
  };
  for (const LabeledSentence &s : b.test) {
    std::vector<std::string> mentions;
    std::set<std::string> titles;
    for (const EntitySpan &span : SpansFromBio(s.tags())) {
      const std::string text = SpanText(s.tokens(), span);
      mentions.push_back(text);
      titles.insert(title_of.at(text));
    }
    if (mentions.empty()) continue;
    ++sentences;
    auto top_title = [&](const std::vector<ScoredDoc> &hits) {
      return hits.empty() ? std::string() : b.index.doc(hits[0].ordinal).title;
    };
    gold_hits += titles.count(top_title(EntityRetrieve(b.index, mentions, config.k)));
    sentence_hits +=
        titles.count(top_title(SentenceRetrieve(b.index, s.tokens(), config.k)));
    const auto iterated = IterativeRetrieve(b.index, s.tokens(), predictor, config);
    predicted_hits += !iterated.contexts.empty() &&
                      titles.count(iterated.contexts[0].title);
  }
  const double gold = 100.0 * gold_hits / sentences;
  const double sentence = 100.0 * sentence_hits / sentences;
  const double predicted = 100.0 * predicted_hits / sentences;
  return {gold > sentence && predicted >= sentence,
          Format("%d sentences with entities; top-1 hit rate gold-mention "
                 "%.1f%%, sentence %.1f%%, T=2 predicted %.1f%%",
                 sentences, gold, sentence, predicted)};
}

// 9. Five-seed voting vs the mean single model.
Outcome EnsembleHelps(const Benchmark &b) {
  ExperimentConfig config = BenchmarkConfig(true);
  config.ensemble_size = 5;
  config.vote_threshold = 0.5;
  const auto result = RunInMemory(&b.index, b.train, b.test, config);
  std::string singles;
  for (const auto &r : result.model_reports) {
    singles += Format("%s%.2f", singles.empty() ? "" : " ", 100.0 * r.macro_f1);
  }
  return {result.ensemble_report.macro_f1 >= result.mean_model_macro_f1,
          Format("ensemble %.2f vs mean %.2f (models %s)",
                 100.0 * result.ensemble_report.macro_f1,
                 100.0 * result.mean_model_macro_f1, singles.c_str())};
}

// 10. `run` twice gives the same report bytes.
Outcome Determinism(const Benchmark &b) {
  const fs::path root = fs::temp_directory_path() / "kbner-acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  auto write = [&](const char *name, const std::string &content) {
    std::ofstream((root / name).string(), std::ios::binary) << content;
  };
  write("corpus.jsonl", b.data.corpus_jsonl);
  write("train.conll", b.data.train_conll);
  write("test.conll", b.data.test_conll);
  ExperimentConfig config = BenchmarkConfig(true);
  config.corpus_path = (root / "corpus.jsonl").string();
  config.train_path = (root / "train.conll").string();
  config.test_path = (root / "test.conll").string();
  config.ensemble_size = 3;
  config.threads = 3;
  config.run_dir = (root / "run-a").string();
  RunExperiment(config);
  config.run_dir = (root / "run-b").string();
  config.threads = 1;
  RunExperiment(config);
  const std::string a = ReadFile((root / "run-a" / "report.json").string());
  const std::string bytes = ReadFile((root / "run-b" / "report.json").string());
  fs::remove_all(root);
  return {!a.empty() && a == bytes,
          Format("two runs (3 threads, 1 thread), report.json %zu bytes, %s",
                 a.size(), a == bytes ? "identical" : "different")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char *name, const Outcome &o) {
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id,
                name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto guarded = [&](int id, const char *name, const std::function<Outcome()> &fn) {
    try {
      report(id, name, fn());
    } catch (const std::exception &e) {
      report(id, name, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "viterbi oracle", ViterbiOracle);
  guarded(2, "gradient check", GradientCheck);
  guarded(3, "normalization", Normalization);
  guarded(4, "bm25 oracle", Bm25Oracle);
  guarded(5, "voting", Voting);
  guarded(6, "char iou", Iou);

  std::map<uint64_t, Benchmark> benchmarks;
  for (uint64_t seed : {42, 43, 44}) benchmarks.emplace(seed, MakeBenchmark(seed));
  CrfModel model;
  guarded(7, "retrieval benefit", [&] { return RetrievalBenefit(benchmarks, &model); });
  guarded(8, "iterative retrieval", [&] { return IterativeHitRate(benchmarks.at(42), model); });
  guarded(9, "ensemble", [&] { return EnsembleHelps(benchmarks.at(42)); });
  guarded(10, "determinism", [&] { return Determinism(benchmarks.at(42)); });

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
