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

#include "kbner/eval.h"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "kbner/error.h"
#include "kbner/utf8.h"

namespace kbner {

namespace {

using SpanIndex = std::map<std::string, const SentenceSpans *>;

SpanIndex IndexById(std::span<const SentenceSpans> sentences,
                    const char *side) {
  SpanIndex index;
  for (const SentenceSpans &s : sentences) {
    if (!index.emplace(s.sentence_id, &s).second) {
      throw Error(ErrorCode::kSentenceIdMismatch,
                  std::string(side) + " repeats sentence id '" +
                      s.sentence_id + "'");
    }
  }
  return index;
}

void CheckSameIds(const SpanIndex &gold, const SpanIndex &pred) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCode::kSentenceIdMismatch,
                "gold has " + std::to_string(gold.size()) +
                    " sentences, predictions have " +
                    std::to_string(pred.size()));
  }
  for (const auto &[id, _] : gold) {
    if (!pred.count(id)) {
      throw Error(ErrorCode::kSentenceIdMismatch,
                  "sentence id '" + id + "' missing from predictions");
    }
  }
}

double Ratio(int num, int den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / den;
}

}  // namespace

double F1(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

MetricsReport EntityF1(std::span<const SentenceSpans> gold,
                       std::span<const SentenceSpans> pred) {
  const SpanIndex gold_by_id = IndexById(gold, "gold");
  const SpanIndex pred_by_id = IndexById(pred, "predictions");
  CheckSameIds(gold_by_id, pred_by_id);

  MetricsReport report;
  for (const auto &[id, gold_sentence] : gold_by_id) {
    const SentenceSpans *pred_sentence = pred_by_id.at(id);
    std::map<EntitySpan, int> gold_count;
    for (const EntitySpan &s : gold_sentence->spans) {
      ++gold_count[s];
      ++report.per_label[s.label].counts.gold;
    }
    std::map<EntitySpan, int> pred_count;
    for (const EntitySpan &s : pred_sentence->spans) {
      ++pred_count[s];
      ++report.per_label[s.label].counts.predicted;
    }
    for (const auto &[span, count] : pred_count) {
      auto it = gold_count.find(span);
      if (it != gold_count.end()) {
        report.per_label[span.label].counts.true_positive +=
            std::min(count, it->second);
      }
    }
  }

  int tp = 0, predicted = 0, gold_total = 0, gold_labels = 0;
  double f1_sum = 0.0;
  for (auto &[label, scores] : report.per_label) {
    const LabelCounts &c = scores.counts;
    scores.precision = Ratio(c.true_positive, c.predicted);
    scores.recall = Ratio(c.true_positive, c.gold);
    scores.f1 = F1(scores.precision, scores.recall);
    tp += c.true_positive;
    predicted += c.predicted;
    gold_total += c.gold;
    if (c.gold > 0) {
      f1_sum += scores.f1;
      ++gold_labels;
    }
  }
  report.macro_f1 = gold_labels == 0 ? 0.0 : f1_sum / gold_labels;
  report.micro_precision = Ratio(tp, predicted);
  report.micro_recall = Ratio(tp, gold_total);
  report.micro_f1 = F1(report.micro_precision, report.micro_recall);
  report.mention_f1 = MentionF1(gold, pred);
  return report;
}

double MentionF1(std::span<const SentenceSpans> gold,
                 std::span<const SentenceSpans> pred) {
  const SpanIndex gold_by_id = IndexById(gold, "gold");
  const SpanIndex pred_by_id = IndexById(pred, "predictions");
  CheckSameIds(gold_by_id, pred_by_id);
  int tp = 0, predicted = 0, gold_total = 0;
  for (const auto &[id, gold_sentence] : gold_by_id) {
    std::map<std::pair<int, int>, int> gold_count;
    for (const EntitySpan &s : gold_sentence->spans) {
      ++gold_count[{s.start, s.end}];
      ++gold_total;
    }
    std::map<std::pair<int, int>, int> pred_count;
    for (const EntitySpan &s : pred_by_id.at(id)->spans) {
      ++pred_count[{s.start, s.end}];
      ++predicted;
    }
    for (const auto &[key, count] : pred_count) {
      auto it = gold_count.find(key);
      if (it != gold_count.end()) tp += std::min(count, it->second);
    }
  }
  return F1(Ratio(tp, predicted), Ratio(tp, gold_total));
}

nlohmann::ordered_json ReportToJson(const MetricsReport &report) {
  nlohmann::ordered_json j;
  j["macro_f1"] = report.macro_f1;
  j["micro_precision"] = report.micro_precision;
  j["micro_recall"] = report.micro_recall;
  j["micro_f1"] = report.micro_f1;
  j["mention_f1"] = report.mention_f1;
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (const auto &[label, s] : report.per_label) {
    nlohmann::ordered_json o;
    o["precision"] = s.precision;
    o["recall"] = s.recall;
    o["f1"] = s.f1;
    o["true_positive"] = s.counts.true_positive;
    o["predicted"] = s.counts.predicted;
    o["gold"] = s.counts.gold;
    labels[label] = std::move(o);
  }
  j["per_label"] = std::move(labels);
  return j;
}

double CharIou(std::string_view a, std::string_view b) {
  std::unordered_map<char32_t, int> ca, cb;
  for (char32_t cp : utf8::Decode(a)) ++ca[cp];
  for (char32_t cp : utf8::Decode(b)) ++cb[cp];
  long inter = 0, uni = 0;
  for (const auto &[cp, n] : ca) {
    auto it = cb.find(cp);
    const int m = it == cb.end() ? 0 : it->second;
    inter += std::min(n, m);
    uni += std::max(n, m);
  }
  for (const auto &[cp, m] : cb) {
    if (!ca.count(cp)) uni += m;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

IouHistogram IouHistogramOf(std::span<const double> values, int bins) {
  if (bins < 1) throw Error(ErrorCode::kInvalidArgument, "bins must be >= 1");
  IouHistogram h;
  for (int i = 0; i <= bins; ++i) {
    h.bin_edges.push_back(static_cast<double>(i) / bins);
  }
  h.counts.assign(bins, 0);
  for (double v : values) {
    int bin = static_cast<int>(v * bins);
    bin = std::clamp(bin, 0, bins - 1);
    ++h.counts[bin];
    ++h.samples;
  }
  return h;
}

IouHistogram IouReport(
    std::span<const std::pair<std::string, std::string>> pairs, int bins) {
  std::vector<double> values;
  values.reserve(pairs.size());
  for (const auto &[query, result] : pairs) {
    values.push_back(CharIou(query, result));
  }
  return IouHistogramOf(values, bins);
}

std::string HistogramToTsv(const IouHistogram &histogram) {
  std::string out = "bin_lo\tbin_hi\tcount\n";
  char buf[96];
  for (size_t i = 0; i < histogram.counts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.4f\t%.4f\t%d\n", histogram.bin_edges[i],
                  histogram.bin_edges[i + 1], histogram.counts[i]);
    out += buf;
  }
  return out;
}

}  // namespace kbner
