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

#ifndef KBNER_EVAL_H_
#define KBNER_EVAL_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kbner/predictions.h"

namespace kbner {

struct LabelCounts {
  int true_positive = 0;
  int predicted = 0;
  int gold = 0;
};

struct LabelScores {
  LabelCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::map<std::string, LabelScores> per_label;  // gold and predicted labels
  double macro_f1 = 0.0;  // mean F1 over labels that occur in gold
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double mention_f1 = 0.0;
};

// Exact (start, end, label) matching. Sentences are paired by id; throws
// SentenceIdMismatch when the id sets differ or an id repeats.
MetricsReport EntityF1(std::span<const SentenceSpans> gold,
                       std::span<const SentenceSpans> pred);

// Micro F1 with labels ignored.
double MentionF1(std::span<const SentenceSpans> gold,
                 std::span<const SentenceSpans> pred);

// Harmonic mean with 0/0 -> 0.
double F1(double precision, double recall);

nlohmann::ordered_json ReportToJson(const MetricsReport &report);

// |A ∩ B| / |A ∪ B| over codepoint multisets; 0 when both are empty.
double CharIou(std::string_view a, std::string_view b);

struct IouHistogram {
  std::vector<double> bin_edges;  // bins + 1 edges over [0, 1]
  std::vector<int> counts;
  int samples = 0;
};

// Bin i covers [i/bins, (i+1)/bins); 1.0 goes to the last bin.
IouHistogram IouReport(std::span<const std::pair<std::string, std::string>> pairs,
                       int bins);
IouHistogram IouHistogramOf(std::span<const double> values, int bins);

// "bin_lo\tbin_hi\tcount" lines.
std::string HistogramToTsv(const IouHistogram &histogram);

}  // namespace kbner

#endif  // KBNER_EVAL_H_
