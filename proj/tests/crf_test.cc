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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "kbner/crf.h"
#include "kbner/random.h"
#include "oracles.h"
#include "test_util.h"

namespace kbner {
namespace {

using testing::CodeOf;
using Tokens = std::vector<std::string>;

AugmentedInput Plain(const Tokens &tokens) { return Augment(tokens, {}, 512); }

bool Has(const std::vector<std::string> &names, const std::string &name) {
  return std::find(names.begin(), names.end(), name) != names.end();
}

// Token identity decides the tag; every tag sequence is valid BIO.
std::vector<TrainingExample> ToySet() {
  const std::vector<std::pair<std::string, std::string>> lexicon = {
      {"paris", "B-LOC"}, {"london", "B-LOC"}, {"new", "B-LOC"}, {"york", "I-LOC"},
      {"john", "B-PER"},  {"smith", "I-PER"},  {"mary", "B-PER"}, {"the", "O"},
      {"visited", "O"},   {"likes", "O"},      {"and", "O"},      {"today", "O"}};
  const std::vector<std::vector<std::string>> sentences = {
      {"john", "smith", "visited", "paris"},
      {"mary", "likes", "london"},
      {"the", "john", "smith", "likes", "new", "york"},
      {"new", "york", "and", "paris"},
      {"mary", "visited", "the", "london", "today"},
      {"john", "likes", "mary"},
      {"paris", "and", "london"},
      {"today", "mary", "smith", "visited", "new", "york"},
      {"the", "new", "york", "today"},
      {"john", "smith"},
      {"mary", "and", "john"},
      {"london", "likes", "paris", "today"},
      {"the", "mary", "visited", "new", "york"},
      {"mary", "smith", "and", "new", "york"},
      {"today", "the", "john", "visited"},
      {"paris"},
      {"london", "and", "new", "york", "and", "paris"},
      {"mary", "smith", "likes", "today"},
      {"visited", "the", "paris"},
      {"john", "and", "mary", "visited", "london"}};
  std::map<std::string, std::string> tag_of(lexicon.begin(), lexicon.end());
  std::vector<TrainingExample> data;
  for (const auto &s : sentences) {
    Tokens tags;
    for (const auto &w : s) tags.push_back(tag_of.at(w));
    data.push_back({Plain(s), tags});
  }
  return data;
}

TEST_CASE("label sets") {
  const Tokens tags = {"B-PER", "O", "I-LOC", "B-LOC"};
  const LabelSet set = LabelSet::FromTags(tags);
  CHECK(set.labels() == Tokens{"O", "B-LOC", "I-LOC", "B-PER", "I-PER"});
  CHECK(set.Index("I-LOC") == 2);
  CHECK(!set.Find("B-ORG").has_value());
  CHECK(CodeOf([&] { set.Index("B-ORG"); }) == ErrorCode::kLabelMismatch);
  CHECK(CodeOf([] { LabelSet::FromLabels({"B-X", "I-X"}); }) == ErrorCode::kLabelMismatch);
  CHECK(CodeOf([] { LabelSet::FromLabels({"O", "I-X"}); }) == ErrorCode::kLabelMismatch);
  CHECK(CodeOf([] { LabelSet::FromLabels({"O", "O"}); }) == ErrorCode::kLabelMismatch);
}

TEST_CASE("feature templates") {
  AugmentedInput in = Plain({"He", "visited", "Paris", "2024"});
  in.features[2].Set(ContextFlag::kTitleMatch);
  const auto names = TokenFeatureNames(in, 2);
  CHECK(Has(names, "w=Paris"));
  CHECK(Has(names, "lw=paris"));
  CHECK(Has(names, "shape=Xxxxx"));
  CHECK(Has(names, "p3=par"));
  CHECK(Has(names, "s2=is"));
  CHECK(Has(names, "w-1=visited"));
  CHECK(Has(names, "w+1=2024"));
  CHECK(Has(names, "flag:TitleMatch"));
  CHECK(Has(TokenFeatureNames(in, 1), "flag+1:TitleMatch"));
  CHECK(Has(TokenFeatureNames(in, 3), "flag-1:TitleMatch"));
  CHECK(Has(TokenFeatureNames(in, 0), "w-1=<s>"));
  CHECK(Has(TokenFeatureNames(in, 3), "w+1=</s>"));
  CHECK(WordShape("2024") == "dddd");
  CHECK(WordShape("A-1") == "X-d");

  const auto plain = TokenFeatureNames(Plain({"He", "visited", "Paris"}), 2);
  for (const auto &n : plain) CHECK(n.find("flag") == std::string::npos);
}

TEST_CASE("frozen extraction ignores unseen features") {
  FeatureMap map;
  const auto seen = ExtractFeatures(Plain({"a", "b"}), map, false);
  const size_t size = map.size();
  const auto frozen = ExtractFeatures(Plain({"a", "zzz"}), map, true);
  CHECK(map.size() == size);
  CHECK(frozen[0].size() < seen[0].size() + 1);
  for (const auto &v : frozen) {
    for (const auto &[id, value] : v) {
      CHECK(id < static_cast<int>(size));
      CHECK(value == 1.0);
    }
  }
  CHECK(ExtractFeatures(Plain({"a", "zzz"}), map) == frozen);
}

TEST_CASE("permuting contexts leaves feature vectors unchanged") {
  RetrievedContext a, b;
  a.title = "Paris";
  a.text = a.plain = "capital of france";
  a.rank = 1;
  b.title = "Seine";
  b.text = "<e:Paris>paris</e> river";
  const auto parsed = ParseAnchorMarkup(b.text);
  b.plain = parsed.plain;
  b.anchors = parsed.anchors;
  b.rank = 2;
  const Tokens tokens = {"paris", "is", "the", "capital"};
  FeatureMap map;
  const auto x = ExtractFeatures(Augment(tokens, {a, b}, 512), map, false);
  std::swap(a.rank, b.rank);
  const auto y = ExtractFeatures(Augment(tokens, {a, b}, 512), map, false);
  CHECK(x == y);
}

TEST_CASE("emission scores") {
  FeatureMap map;
  map.Intern("f0");
  map.Intern("f1");
  CrfModel model = CrfModel::Zero(LabelSet::FromLabels({"O", "B-A"}), map);
  const std::vector<FeatureVector> feats = {{{0, 1.0}}, {{1, 1.0}}, {}};
  const Matrix zero = ScoreEmissions(model, feats);
  for (double v : zero.data) CHECK(v == 0.0);
  model.weights(1, 1) = 2.0;
  const Matrix one = ScoreEmissions(model, feats);
  CHECK(one(1, 1) == 2.0);
  CHECK(one(1, 0) == 0.0);
  CHECK(one(0, 1) == 0.0);
  const std::vector<FeatureVector> bad = {{{5, 1.0}}};
  CHECK(CodeOf([&] { ScoreEmissions(model, bad); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("property: emissions equal a dense matrix product") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mi = oracle::RandomModelInstance(rng, 1 + rng.Below(6),
                                                2 + rng.Below(3), 8);
    const Matrix got = ScoreEmissions(mi.model, mi.instance.features);
    const Matrix want = oracle::DenseEmissions(mi.model, mi.instance.features);
    for (size_t i = 0; i < got.data.size(); ++i) {
      CHECK(std::abs(got.data[i] - want.data[i]) <= 1e-12);
    }
  }
}

TEST_CASE("sequence score") {
  Rng rng(42);
  auto inst = oracle::RandomInstance(rng, 3, 3, false);
  const std::vector<int> y = {2, 0, 1};
  const double hand = inst.transitions.start[2] + inst.emissions(0, 2) +
                      inst.transitions.matrix(2, 0) + inst.emissions(1, 0) +
                      inst.transitions.matrix(0, 1) + inst.emissions(2, 1);
  CHECK(SequenceScore(inst.emissions, inst.transitions, y) == doctest::Approx(hand).epsilon(1e-15));

  auto single = oracle::RandomInstance(rng, 1, 3, false);
  std::fill(single.transitions.start.begin(), single.transitions.start.end(), 0.0);
  const std::vector<int> y1 = {1};
  CHECK(SequenceScore(single.emissions, single.transitions, y1) == single.emissions(0, 1));

  const Matrix zero(4, 3);
  const Transitions flat{Matrix(3, 3), std::vector<double>(3, 0.0)};
  const std::vector<int> any = {0, 2, 1, 1};
  CHECK(SequenceScore(zero, flat, any) == 0.0);
}

TEST_CASE("log partition") {
  SUBCASE("uniform model gives n ln t") {
    for (int n = 1; n <= 5; ++n) {
      for (int t = 1; t <= 4; ++t) {
        const Transitions flat{Matrix(t, t), std::vector<double>(t, 0.0)};
        CHECK(LogPartition(Matrix(n, t), flat) ==
              doctest::Approx(n * std::log(static_cast<double>(t))).epsilon(1e-14));
      }
    }
  }
  SUBCASE("one token is the logsumexp of start + emissions") {
    Rng rng(43);
    const auto inst = oracle::RandomInstance(rng, 1, 4, false);
    std::vector<double> row;
    for (int y = 0; y < 4; ++y) row.push_back(inst.transitions.start[y] + inst.emissions(0, y));
    CHECK(LogPartition(inst.emissions, inst.transitions) ==
          doctest::Approx(LogSumExp(row)).epsilon(1e-15));
  }
  SUBCASE("enumeration oracle") {
    Rng rng(44);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 1 + rng.Below(5), t = 1 + rng.Below(4);
      const auto inst = oracle::RandomInstance(rng, n, t, false);
      CHECK(std::abs(LogPartition(inst.emissions, inst.transitions) -
                     oracle::LogPartition(inst.emissions, inst.transitions)) < 1e-9);
      CHECK(std::abs(oracle::TotalProbability(inst.emissions, inst.transitions) - 1.0) <= 1e-9);
    }
  }
  SUBCASE("large scores stay finite") {
    Matrix em(3, 2);
    em(0, 0) = 1000.0;
    em(1, 1) = -1000.0;
    em(2, 0) = 800.0;
    const Transitions flat{Matrix(2, 2), std::vector<double>(2, 0.0)};
    CHECK(std::isfinite(LogPartition(em, flat)));
    CHECK(LogSumExp(std::vector<double>{1000.0, 1000.0}) ==
          doctest::Approx(1000.0 + std::log(2.0)));
  }
}

TEST_CASE("negative log-likelihood and gradient") {
  SUBCASE("zero model, no penalty") {
    FeatureMap map;
    map.Intern("f");
    const CrfModel model = CrfModel::Zero(LabelSet::FromLabels({"O", "B-A", "I-A"}), map);
    const std::vector<Instance> batch = {{{{{0, 1.0}}, {}, {{0, 1.0}}, {}}, {0, 1, 2, 0}}};
    CHECK(NllAndGradient(model, batch, 0.0, nullptr) ==
          doctest::Approx(4 * std::log(3.0)).epsilon(1e-14));
  }
  SUBCASE("finite differences") {
    Rng rng(45);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
      const auto mi = oracle::RandomModelInstance(rng, 1 + rng.Below(5), 2 + rng.Below(3), 5);
      Gradient g;
      const std::vector<Instance> batch{mi.instance};
      NllAndGradient(mi.model, batch, 0.05, &g);
      std::vector<double> analytic = g.weights.data;
      analytic.insert(analytic.end(), g.transitions.matrix.data.begin(),
                      g.transitions.matrix.data.end());
      analytic.insert(analytic.end(), g.transitions.start.begin(), g.transitions.start.end());
      const auto numeric = oracle::FiniteDifferenceGradient(mi.model, mi.instance, 0.05, 1e-6);
      REQUIRE(numeric.size() == analytic.size());
      for (size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
      }
    }
    CHECK(worst < 1e-4);
  }
  SUBCASE("a model that fits gold drives the loss toward zero") {
    FeatureMap map;
    map.Intern("a");
    map.Intern("b");
    CrfModel model = CrfModel::Zero(LabelSet::FromLabels({"O", "B-A"}), map);
    const std::vector<Instance> batch = {{{{{0, 1.0}}, {{1, 1.0}}}, {0, 1}}};
    double previous = NllAndGradient(model, batch, 0.0, nullptr);
    for (double scale : {1.0, 5.0, 20.0}) {
      model.weights(0, 0) = model.weights(1, 1) = scale;
      const double loss = NllAndGradient(model, batch, 0.0, nullptr);
      CHECK(loss > 0.0);
      CHECK(loss < previous);
      previous = loss;
    }
    CHECK(previous < 1e-8);
  }
}

TEST_CASE("viterbi") {
  SUBCASE("one token takes the best start + emission") {
    Matrix em(1, 3);
    em(0, 1) = 2.0;
    em(0, 2) = 1.0;
    const Transitions flat{Matrix(3, 3), std::vector<double>(3, 0.0)};
    const Decoded d = Viterbi(em, flat);
    CHECK(d.labels == std::vector<int>{1});
    CHECK(d.score == 2.0);
  }
  SUBCASE("two tokens, two labels against the four sequences") {
    Rng rng(46);
    for (int trial = 0; trial < 50; ++trial) {
      const auto inst = oracle::RandomInstance(rng, 2, 2, trial % 2 == 0);
      const auto want = oracle::Argmax(inst.emissions, inst.transitions);
      const Decoded got = Viterbi(inst.emissions, inst.transitions);
      CHECK(got.labels == want.labels);
      CHECK(got.score == doctest::Approx(want.score).epsilon(1e-12));
    }
  }
  SUBCASE("ties go to the lower label at the last differing position") {
    const Matrix em(3, 3);
    const Transitions flat{Matrix(3, 3), std::vector<double>(3, 0.0)};
    CHECK(Viterbi(em, flat).labels == std::vector<int>{0, 0, 0});
  }
  SUBCASE("random instances with ties") {
    Rng rng(47);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 1 + rng.Below(6), t = 1 + rng.Below(4);
      const auto inst = oracle::RandomInstance(rng, n, t, true);
      const auto want = oracle::Argmax(inst.emissions, inst.transitions);
      const Decoded got = Viterbi(inst.emissions, inst.transitions);
      CHECK(got.labels == want.labels);
      CHECK(std::abs(got.score - want.score) <= 1e-9);
    }
  }
  SUBCASE("BIO-constrained decoding equals constrained enumeration") {
    const LabelSet labels = LabelSet::FromLabels({"O", "B-A", "I-A", "B-B", "I-B"});
    Rng rng(48);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + rng.Below(4);
      auto inst = oracle::RandomInstance(rng, n, 5, trial % 2 == 0);
      // Make I- tags attractive so that the mask matters.
      for (int i = 0; i < n; ++i) {
        inst.emissions(i, 2) += 3.0;
        inst.emissions(i, 4) += 3.0;
      }
      const auto want = oracle::Argmax(inst.emissions, inst.transitions, &labels);
      const Decoded got = Viterbi(inst.emissions, inst.transitions, &labels);
      CHECK(got.labels == want.labels);
      CHECK(oracle::BioAdmissible(labels, got.labels));
      CHECK(std::abs(got.score - want.score) <= 1e-9);
    }
  }
  SUBCASE("shifting one position's emissions keeps the argmax") {
    Rng rng(49);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + rng.Below(6), t = 1 + rng.Below(4);
      auto inst = oracle::RandomInstance(rng, n, t, false);
      const auto before = Viterbi(inst.emissions, inst.transitions).labels;
      const int i = rng.Below(n);
      const double c = rng.Uniform(-50.0, 50.0);
      for (int y = 0; y < t; ++y) inst.emissions(i, y) += c;
      CHECK(Viterbi(inst.emissions, inst.transitions).labels == before);
    }
  }
}

TEST_CASE("training") {
  const auto data = ToySet();
  TrainConfig config;
  config.epochs = 50;
  const CrfModel model = Train(data, config);
  int correct = 0, total = 0;
  for (const auto &ex : data) {
    const auto tags = PredictTags(model, ex.input, true);
    for (size_t i = 0; i < tags.size(); ++i) correct += tags[i] == ex.tags[i];
    total += static_cast<int>(tags.size());
  }
  CHECK(correct == total);

  SUBCASE("same seed, same bytes; different seed, different order") {
    CHECK(SerializeModel(Train(data, config)) == SerializeModel(model));
    TrainConfig other = config;
    other.seed = 7;
    CHECK(SerializeModel(Train(data, other)) != SerializeModel(model));
  }
  SUBCASE("one epoch lowers the mean NLL") {
    TrainConfig one = config;
    one.epochs = 1;
    const CrfModel trained = Train(data, one);
    const CrfModel zero = CrfModel::Zero(trained.labels, trained.features);
    std::vector<Instance> instances;
    for (const auto &ex : data) {
      Instance inst;
      inst.features = ExtractFeatures(ex.input, trained.features);
      for (const auto &tag : ex.tags) inst.gold.push_back(trained.labels.Index(tag));
      instances.push_back(inst);
    }
    CHECK(MeanNll(trained, instances) < MeanNll(zero, instances));
  }
}

TEST_CASE("training preconditions") {
  TrainConfig config;
  config.epochs = 0;
  CHECK(CodeOf([&] { config.Validate(); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { Train(ToySet(), config); }) == ErrorCode::kInvalidArgument);
  config.epochs = 1;
  config.learning_rate = 0.0;
  CHECK(CodeOf([&] { config.Validate(); }) == ErrorCode::kInvalidArgument);
  config.learning_rate = 0.1;
  config.l2_lambda = -1.0;
  CHECK(CodeOf([&] { config.Validate(); }) == ErrorCode::kInvalidArgument);
  config.l2_lambda = 0.0;
  CHECK(CodeOf([&] { Train(std::vector<TrainingExample>{}, config); }) ==
        ErrorCode::kEmptyDataset);
  const auto labels = LabelSet::FromLabels({"O", "B-PER", "I-PER"});
  CHECK(CodeOf([&] { Train(ToySet(), config, labels); }) == ErrorCode::kLabelMismatch);
}

TEST_CASE("constrained decoding never emits an orphan I- tag") {
  const auto data = ToySet();
  TrainConfig config;
  config.epochs = 3;
  const CrfModel model = Train(data, config);
  for (const Tokens &s : std::vector<Tokens>{{"york", "smith"}, {"smith"}, {"london", "smith"}}) {
    const auto tags = PredictTags(model, Plain(s), true);
    std::vector<int> ids;
    for (const auto &t : tags) ids.push_back(model.labels.Index(t));
    CHECK(oracle::BioAdmissible(model.labels, ids));
  }
}

TEST_CASE("model files") {
  const auto data = ToySet();
  TrainConfig config;
  config.epochs = 2;
  const CrfModel model = Train(data, config);
  const std::string bytes = SerializeModel(model);
  const auto json = nlohmann::json::parse(bytes);
  for (const char *key : {"version", "labels", "features", "W", "b", "start"}) {
    CHECK(json.contains(key));
  }

  SUBCASE("save, load, save gives identical bytes") {
    const auto path = (std::filesystem::temp_directory_path() / "kbner-model-test.json").string();
    SaveModel(model, path);
    const CrfModel loaded = LoadModel(path);
    CHECK(loaded.weights.data == model.weights.data);
    CHECK(loaded.transitions.matrix.data == model.transitions.matrix.data);
    CHECK(loaded.transitions.start == model.transitions.start);
    CHECK(SerializeModel(loaded) == bytes);
    std::filesystem::remove(path);
  }
  SUBCASE("truncated") {
    CHECK(CodeOf([&] { DeserializeModel(bytes.substr(0, bytes.size() / 2)); }) ==
          ErrorCode::kCorruptFile);
    CHECK(CodeOf([&] { DeserializeModel(""); }) == ErrorCode::kCorruptFile);
  }
  SUBCASE("wrong shapes") {
    auto broken = json;
    broken["start"].erase(0);
    CHECK(CodeOf([&] { DeserializeModel(broken.dump()); }) == ErrorCode::kCorruptFile);
  }
  SUBCASE("older version") {
    auto old = json;
    old["version"] = 0;
    try {
      DeserializeModel(old.dump());
      FAIL("expected VersionMismatch");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::kVersionMismatch);
      const std::string what = e.what();
      CHECK(what.find("version 0") != std::string::npos);
      CHECK(what.find("expected 1") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK(CodeOf([] { LoadModel("/nonexistent/model.json"); }) == ErrorCode::kIo);
  }
}

}  // namespace
}  // namespace kbner
