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

#include "kbner/crf.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kbner/error.h"
#include "kbner/random.h"

namespace kbner {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Allowed[prev][next]; row t is the start state.
std::vector<std::vector<bool>> BioMask(const LabelSet &labels) {
  const int t = labels.size();
  std::vector<std::vector<bool>> allowed(t + 1, std::vector<bool>(t, true));
  for (int next = 0; next < t; ++next) {
    const std::string &to = labels.Label(next);
    if (to[0] != 'I') continue;
    const std::string_view type = TagLabel(to);
    allowed[t][next] = false;
    for (int prev = 0; prev < t; ++prev) {
      const std::string &from = labels.Label(prev);
      allowed[prev][next] = from != "O" && TagLabel(from) == type;
    }
  }
  return allowed;
}

struct ForwardBackward {
  Matrix alpha;
  Matrix beta;
  double log_z = 0.0;
};

ForwardBackward RunForwardBackward(const Matrix &em, const Transitions &tr) {
  const int n = em.rows;
  const int t = em.cols;
  ForwardBackward fb{Matrix(n, t), Matrix(n, t), 0.0};
  std::vector<double> buf(t);
  for (int y = 0; y < t; ++y) fb.alpha(0, y) = tr.start[y] + em(0, y);
  for (int i = 1; i < n; ++i) {
    for (int y = 0; y < t; ++y) {
      for (int p = 0; p < t; ++p) {
        buf[p] = fb.alpha(i - 1, p) + tr.matrix(p, y);
      }
      fb.alpha(i, y) = LogSumExp(buf) + em(i, y);
    }
  }
  for (int y = 0; y < t; ++y) fb.beta(n - 1, y) = 0.0;
  for (int i = n - 2; i >= 0; --i) {
    for (int y = 0; y < t; ++y) {
      for (int q = 0; q < t; ++q) {
        buf[q] = tr.matrix(y, q) + em(i + 1, q) + fb.beta(i + 1, q);
      }
      fb.beta(i, y) = LogSumExp(buf);
    }
  }
  std::vector<double> last(t);
  for (int y = 0; y < t; ++y) last[y] = fb.alpha(n - 1, y);
  fb.log_z = LogSumExp(last);
  return fb;
}

void CheckDims(const Matrix &em, const Transitions &tr) {
  if (em.cols != tr.num_labels() ||
      static_cast<int>(tr.start.size()) != tr.num_labels() ||
      tr.matrix.cols != tr.num_labels()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "emission columns do not match the label count");
  }
}

// Adds one instance's NLL gradient into `grad` (if non-null); returns NLL.
double AccumulateInstance(const CrfModel &model, const Instance &inst,
                          Gradient *grad) {
  const Matrix em = ScoreEmissions(model, inst.features);
  const Transitions &tr = model.transitions;
  const int n = em.rows;
  const int t = em.cols;
  if (static_cast<int>(inst.gold.size()) != n) {
    throw Error(ErrorCode::kLabelMismatch, "gold length differs from input");
  }
  if (n == 0) return 0.0;
  const ForwardBackward fb = RunForwardBackward(em, tr);
  const double nll = fb.log_z - SequenceScore(em, tr, inst.gold);
  if (grad == nullptr) return nll;

  for (int i = 0; i < n; ++i) {
    for (int y = 0; y < t; ++y) {
      double delta = std::exp(fb.alpha(i, y) + fb.beta(i, y) - fb.log_z);
      if (inst.gold[i] == y) delta -= 1.0;
      if (delta == 0.0) continue;
      for (const auto &[f, v] : inst.features[i]) {
        grad->weights(f, y) += v * delta;
      }
      if (i == 0) grad->transitions.start[y] += delta;
    }
    if (i == 0) continue;
    for (int p = 0; p < t; ++p) {
      for (int y = 0; y < t; ++y) {
        const double pair = std::exp(fb.alpha(i - 1, p) + tr.matrix(p, y) +
                                     em(i, y) + fb.beta(i, y) - fb.log_z);
        grad->transitions.matrix(p, y) += pair;
      }
    }
    grad->transitions.matrix(inst.gold[i - 1], inst.gold[i]) -= 1.0;
  }
  return nll;
}

Gradient ZeroGradient(const CrfModel &model) {
  Gradient g;
  g.weights = Matrix(model.weights.rows, model.weights.cols);
  g.transitions.matrix = Matrix(model.num_labels(), model.num_labels());
  g.transitions.start.assign(model.num_labels(), 0.0);
  return g;
}

[[noreturn]] void Corrupt(const std::string &what) {
  throw Error(ErrorCode::kCorruptFile, "model file: " + what);
}

std::vector<double> ReadRow(const nlohmann::json &j, size_t expected,
                            const char *what) {
  if (!j.is_array() || j.size() != expected) {
    Corrupt(std::string(what) + " has the wrong shape");
  }
  std::vector<double> row;
  row.reserve(expected);
  for (const auto &x : j) {
    if (!x.is_number()) Corrupt(std::string(what) + " holds a non-number");
    const double v = x.get<double>();
    if (!std::isfinite(v)) Corrupt(std::string(what) + " is not finite");
    row.push_back(v);
  }
  return row;
}

}  // namespace

// --- LabelSet ---

LabelSet LabelSet::FromLabels(std::vector<std::string> labels) {
  LabelSet set;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (!IsValidTag(labels[i])) {
      throw Error(ErrorCode::kLabelMismatch, "invalid label " + labels[i]);
    }
    if (!set.index_.emplace(labels[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::kLabelMismatch, "duplicate label " + labels[i]);
    }
  }
  if (!set.index_.count("O")) {
    throw Error(ErrorCode::kLabelMismatch, "label set lacks \"O\"");
  }
  for (const std::string &l : labels) {
    if (l[0] == 'I' && !set.index_.count("B-" + std::string(TagLabel(l)))) {
      throw Error(ErrorCode::kLabelMismatch, l + " without matching B- tag");
    }
  }
  set.labels_ = std::move(labels);
  return set;
}

LabelSet LabelSet::FromTags(std::span<const std::string> tags) {
  std::set<std::string> types;
  for (const std::string &tag : tags) {
    if (!IsValidTag(tag)) {
      throw Error(ErrorCode::kLabelMismatch, "invalid tag " + tag);
    }
    if (tag != "O") types.insert(std::string(TagLabel(tag)));
  }
  std::vector<std::string> labels{"O"};
  for (const std::string &type : types) {
    labels.push_back("B-" + type);
    labels.push_back("I-" + type);
  }
  return FromLabels(std::move(labels));
}

std::optional<int> LabelSet::Find(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int LabelSet::Index(std::string_view tag) const {
  if (auto i = Find(tag)) return *i;
  throw Error(ErrorCode::kLabelMismatch,
              "tag '" + std::string(tag) + "' not in the label set");
}

// --- scoring ---

CrfModel CrfModel::Zero(LabelSet labels, FeatureMap features) {
  CrfModel model;
  const int t = labels.size();
  model.weights = Matrix(static_cast<int>(features.size()), t);
  model.transitions.matrix = Matrix(t, t);
  model.transitions.start.assign(t, 0.0);
  model.labels = std::move(labels);
  model.features = std::move(features);
  return model;
}

Matrix ScoreEmissions(const CrfModel &model,
                      std::span<const FeatureVector> features) {
  const int t = model.num_labels();
  if (model.weights.cols != t) {
    throw Error(ErrorCode::kDimensionMismatch, "weight matrix width");
  }
  Matrix em(static_cast<int>(features.size()), t);
  for (int i = 0; i < em.rows; ++i) {
    for (const auto &[f, v] : features[i]) {
      if (f < 0 || f >= model.weights.rows) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "feature id " + std::to_string(f) + " outside the model");
      }
      for (int y = 0; y < t; ++y) em(i, y) += model.weights(f, y) * v;
    }
  }
  return em;
}

double SequenceScore(const Matrix &emissions, const Transitions &transitions,
                     std::span<const int> labels) {
  CheckDims(emissions, transitions);
  if (static_cast<int>(labels.size()) != emissions.rows) {
    throw Error(ErrorCode::kDimensionMismatch, "label sequence length");
  }
  if (labels.empty()) return 0.0;
  double s = transitions.start[labels[0]] + emissions(0, labels[0]);
  for (size_t i = 1; i < labels.size(); ++i) {
    s = s + transitions.matrix(labels[i - 1], labels[i]) +
        emissions(static_cast<int>(i), labels[i]);
  }
  return s;
}

double LogSumExp(std::span<const double> values) {
  double max = kNegInf;
  for (double v : values) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

double LogPartition(const Matrix &emissions, const Transitions &transitions) {
  CheckDims(emissions, transitions);
  if (emissions.rows == 0) return 0.0;
  return RunForwardBackward(emissions, transitions).log_z;
}

double NllAndGradient(const CrfModel &model, std::span<const Instance> batch,
                      double l2, Gradient *grad) {
  if (grad != nullptr) *grad = ZeroGradient(model);
  double loss = 0.0;
  for (const Instance &inst : batch) {
    loss += AccumulateInstance(model, inst, grad);
  }
  double sq = 0.0;
  for (double w : model.weights.data) sq += w * w;
  for (double w : model.transitions.matrix.data) sq += w * w;
  for (double w : model.transitions.start) sq += w * w;
  loss += 0.5 * l2 * sq;
  if (grad != nullptr && l2 != 0.0) {
    for (size_t i = 0; i < grad->weights.data.size(); ++i) {
      grad->weights.data[i] += l2 * model.weights.data[i];
    }
    for (size_t i = 0; i < grad->transitions.matrix.data.size(); ++i) {
      grad->transitions.matrix.data[i] +=
          l2 * model.transitions.matrix.data[i];
    }
    for (size_t i = 0; i < grad->transitions.start.size(); ++i) {
      grad->transitions.start[i] += l2 * model.transitions.start[i];
    }
  }
  return loss;
}

Decoded Viterbi(const Matrix &emissions, const Transitions &transitions,
                const LabelSet *constrain) {
  CheckDims(emissions, transitions);
  const int n = emissions.rows;
  const int t = emissions.cols;
  Decoded out;
  if (n == 0) return out;
  std::vector<std::vector<bool>> mask;
  if (constrain != nullptr) {
    if (constrain->size() != t) {
      throw Error(ErrorCode::kDimensionMismatch, "label set size");
    }
    mask = BioMask(*constrain);
  }
  auto allowed = [&](int prev, int next) {
    return mask.empty() || mask[prev < 0 ? t : prev][next];
  };

  Matrix delta(n, t);
  std::vector<int> back(size_t(n) * t, 0);
  for (int y = 0; y < t; ++y) {
    delta(0, y) = allowed(-1, y) ? transitions.start[y] + emissions(0, y)
                                 : kNegInf;
  }
  for (int i = 1; i < n; ++i) {
    for (int y = 0; y < t; ++y) {
      double best = kNegInf;
      int arg = 0;
      for (int p = 0; p < t; ++p) {
        if (!allowed(p, y)) continue;
        const double s = delta(i - 1, p) + transitions.matrix(p, y);
        if (s > best) {
          best = s;
          arg = p;
        }
      }
      delta(i, y) = best + emissions(i, y);
      back[size_t(i) * t + y] = arg;
    }
  }
  int last = 0;
  for (int y = 1; y < t; ++y) {
    if (delta(n - 1, y) > delta(n - 1, last)) last = y;
  }
  out.score = delta(n - 1, last);
  out.labels.assign(n, 0);
  out.labels[n - 1] = last;
  for (int i = n - 1; i > 0; --i) {
    out.labels[i - 1] = back[size_t(i) * t + out.labels[i]];
  }
  return out;
}

// --- training ---

void TrainConfig::Validate() const {
  if (epochs < 1) {
    throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  }
  if (!(l2_lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "l2_lambda must be >= 0");
  }
  if (batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  }
}

CrfModel Train(std::span<const TrainingExample> data,
               const TrainConfig &config,
               const std::optional<LabelSet> &labels) {
  config.Validate();
  if (data.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no training examples");
  }
  LabelSet label_set;
  if (labels) {
    label_set = *labels;
  } else {
    std::vector<std::string> all;
    for (const auto &ex : data) {
      all.insert(all.end(), ex.tags.begin(), ex.tags.end());
    }
    label_set = LabelSet::FromTags(all);
  }

  FeatureMap features;
  std::vector<Instance> instances;
  instances.reserve(data.size());
  for (size_t e = 0; e < data.size(); ++e) {
    const auto &ex = data[e];
    if (ex.tags.size() != ex.input.tokens.size()) {
      throw Error(ErrorCode::kLabelMismatch,
                  "example " + std::to_string(e) + " has " +
                      std::to_string(ex.tags.size()) + " tags for " +
                      std::to_string(ex.input.tokens.size()) + " tokens");
    }
    Instance inst;
    inst.features = ExtractFeatures(ex.input, features, /*frozen=*/false);
    for (const std::string &tag : ex.tags) {
      inst.gold.push_back(label_set.Index(tag));
    }
    instances.push_back(std::move(inst));
  }

  CrfModel model = CrfModel::Zero(std::move(label_set), std::move(features));
  Gradient grad = ZeroGradient(model);
  Rng rng(config.seed);
  std::vector<size_t> order(instances.size());
  std::iota(order.begin(), order.end(), size_t{0});
  const double lr = config.learning_rate;
  const double l2 = config.l2_lambda;

  auto step = [&](std::vector<double> &theta, std::vector<double> &g,
                  double scale) {
    for (size_t i = 0; i < theta.size(); ++i) {
      theta[i] -= lr * (g[i] * scale + l2 * theta[i]);
      g[i] = 0.0;
    }
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.Shuffle(order);
    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      for (size_t j = begin; j < end; ++j) {
        AccumulateInstance(model, instances[order[j]], &grad);
      }
      const double scale = 1.0 / static_cast<double>(end - begin);
      step(model.weights.data, grad.weights.data, scale);
      step(model.transitions.matrix.data, grad.transitions.matrix.data, scale);
      step(model.transitions.start, grad.transitions.start, scale);
    }
  }
  return model;
}

double MeanNll(const CrfModel &model, std::span<const Instance> data) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const Instance &inst : data) {
    total += AccumulateInstance(model, inst, nullptr);
  }
  return total / static_cast<double>(data.size());
}

std::vector<std::string> PredictTags(const CrfModel &model,
                                     const AugmentedInput &input,
                                     bool bio_constrained) {
  const auto features = ExtractFeatures(input, model.features);
  const Matrix em = ScoreEmissions(model, features);
  const Decoded best = Viterbi(em, model.transitions,
                               bio_constrained ? &model.labels : nullptr);
  std::vector<std::string> tags;
  tags.reserve(best.labels.size());
  for (int y : best.labels) tags.push_back(model.labels.Label(y));
  return tags;
}

std::vector<EntitySpan> PredictSpans(const CrfModel &model,
                                     const AugmentedInput &input,
                                     bool bio_constrained) {
  return SpansFromBio(PredictTags(model, input, bio_constrained));
}

// --- persistence ---

std::string SerializeModel(const CrfModel &model) {
  const int t = model.num_labels();
  nlohmann::ordered_json j;
  j["version"] = CrfModel::kVersion;
  j["labels"] = model.labels.labels();
  j["features"] = model.features.names();
  auto rows = nlohmann::ordered_json::array();
  for (int f = 0; f < model.weights.rows; ++f) {
    rows.push_back(std::vector<double>(
        model.weights.data.begin() + size_t(f) * t,
        model.weights.data.begin() + size_t(f + 1) * t));
  }
  j["W"] = std::move(rows);
  auto b = nlohmann::ordered_json::array();
  for (int p = 0; p < t; ++p) {
    b.push_back(std::vector<double>(
        model.transitions.matrix.data.begin() + size_t(p) * t,
        model.transitions.matrix.data.begin() + size_t(p + 1) * t));
  }
  j["b"] = std::move(b);
  j["start"] = model.transitions.start;
  return j.dump() + "\n";
}

CrfModel DeserializeModel(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    Corrupt(e.what());
  }
  if (!j.is_object()) Corrupt("not a JSON object");
  auto version = j.find("version");
  if (version == j.end() || !version->is_number_integer()) {
    Corrupt("missing version");
  }
  if (version->get<int>() != CrfModel::kVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "model file version " + std::to_string(version->get<int>()) +
                    ", expected " + std::to_string(CrfModel::kVersion));
  }
  for (const char *key : {"labels", "features", "W", "b", "start"}) {
    if (!j.contains(key) || !j[key].is_array()) {
      Corrupt(std::string("missing array \"") + key + "\"");
    }
  }

  LabelSet labels;
  FeatureMap features;
  try {
    labels = LabelSet::FromLabels(j["labels"].get<std::vector<std::string>>());
    for (const auto &name : j["features"]) {
      const auto s = name.get<std::string>();
      if (features.Find(s)) Corrupt("duplicate feature " + s);
      features.Intern(s);
    }
  } catch (const nlohmann::json::exception &e) {
    Corrupt(e.what());
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kCorruptFile) throw;
    Corrupt(e.what());
  }

  const size_t t = static_cast<size_t>(labels.size());
  const size_t num_features = features.size();
  CrfModel model = CrfModel::Zero(std::move(labels), std::move(features));
  if (j["W"].size() != num_features) Corrupt("W has the wrong row count");
  for (size_t f = 0; f < num_features; ++f) {
    const auto row = ReadRow(j["W"][f], t, "W");
    std::copy(row.begin(), row.end(), model.weights.data.begin() + f * t);
  }
  if (j["b"].size() != t) Corrupt("b has the wrong row count");
  for (size_t p = 0; p < t; ++p) {
    const auto row = ReadRow(j["b"][p], t, "b");
    std::copy(row.begin(), row.end(),
              model.transitions.matrix.data.begin() + p * t);
  }
  model.transitions.start = ReadRow(j["start"], t, "start");
  return model;
}

void SaveModel(const CrfModel &model, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << SerializeModel(model);
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

CrfModel LoadModel(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeModel(ss.str());
}

}  // namespace kbner
