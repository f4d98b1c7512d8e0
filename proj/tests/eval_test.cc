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


#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "kbner/eval.h"
#include "kbner/random.h"
#include "test_util.h"

namespace kbner {
namespace {

using testing::CodeOf;
using Doc = std::vector<SentenceSpans>;

Doc RandomDoc(Rng &rng, int sentences) {
  Doc doc;
  for (int i = 0; i < sentences; ++i) {
    SentenceSpans s{"s" + std::to_string(i), {}};
    for (int start = 0; start < 8; start += 2) {
      if (rng.Bernoulli(0.5)) {
        s.spans.push_back({start, start + 1 + static_cast<int>(rng.Below(2)),
                           rng.Bernoulli(0.5) ? "A" : "B"});
      }
    }
    doc.push_back(std::move(s));
  }
  return doc;
}

// A prediction that keeps, relabels, shifts, or drops each gold span.
Doc Corrupt(Rng &rng, const Doc &gold) {
  Doc pred = gold;
  for (auto &s : pred) {
    std::vector<EntitySpan> spans;
    for (EntitySpan span : s.spans) {
      const size_t roll = rng.Below(4);
      if (roll == 1) span.label = span.label == "A" ? "B" : "A";
      if (roll == 2) span.end = span.start + 1 + (span.length() == 1);
      if (roll != 3) spans.push_back(span);
    }
    if (rng.Bernoulli(0.3)) spans.push_back({9, 10, "C"});
    s.spans = spans;
  }
  return pred;
}

TEST_CASE("entity f1 examples") {
  SUBCASE("per-label 1.0 and 0.0 average to 0.5") {
    const Doc gold = {{"0", {{0, 1, "A"}, {2, 3, "B"}}}};
    const Doc pred = {{"0", {{0, 1, "A"}}}};
    const auto r = EntityF1(gold, pred);
    CHECK(r.per_label.at("A").f1 == 1.0);
    CHECK(r.per_label.at("B").f1 == 0.0);
    CHECK(r.macro_f1 == 0.5);
  }
  SUBCASE("exact prediction") {
    const Doc gold = {{"0", {{0, 1, "A"}, {2, 3, "B"}}}, {"1", {}}};
    const auto r = EntityF1(gold, gold);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.micro_f1 == 1.0);
    CHECK(r.mention_f1 == 1.0);
  }
  SUBCASE("micro follows the common label, macro does not") {
    Doc gold, pred;
    for (int i = 0; i < 9; ++i) {
      gold.push_back({std::to_string(i), {{0, 1, "A"}}});
      pred.push_back(gold.back());
    }
    gold.push_back({"9", {{0, 1, "B"}}});
    pred.push_back({"9", {{0, 1, "A"}}});
    const auto r = EntityF1(gold, pred);
    CHECK(r.micro_precision == doctest::Approx(0.9));
    CHECK(r.micro_recall == doctest::Approx(0.9));
    CHECK(r.micro_f1 == doctest::Approx(0.9));
    // A: P = 9/10, R = 1, F1 = 18/19; B: F1 = 0.
    CHECK(r.per_label.at("A").f1 == doctest::Approx(18.0 / 19.0));
    CHECK(r.macro_f1 == doctest::Approx(9.0 / 19.0));
  }
  SUBCASE("labels absent from gold count against micro only") {
    const Doc gold = {{"0", {{0, 1, "A"}}}};
    const Doc pred = {{"0", {{0, 1, "A"}, {2, 3, "Z"}}}};
    const auto r = EntityF1(gold, pred);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.micro_precision == 0.5);
    CHECK(r.per_label.at("Z").counts.predicted == 1);
  }
  SUBCASE("nothing predicted, nothing in gold") {
    const Doc empty = {{"0", {}}};
    const auto r = EntityF1(empty, empty);
    CHECK(r.macro_f1 == 0.0);
    CHECK(r.micro_f1 == 0.0);
  }
}

TEST_CASE("entity f1 with the 9:1 label split") {
  // Every A right, the single B predicted with the wrong label.
  Doc gold, pred;
  for (int i = 0; i < 9; ++i) {
    gold.push_back({std::to_string(i), {{0, 1, "A"}}});
    pred.push_back(gold.back());
  }
  gold.push_back({"9", {{0, 1, "B"}}});
  pred.push_back({"9", {{0, 1, "C"}}});
  const auto r = EntityF1(gold, pred);
  CHECK(r.micro_f1 == doctest::Approx(0.9));
  CHECK(r.macro_f1 == doctest::Approx(0.5));
}

TEST_CASE("sentence ids must agree") {
  const Doc gold = {{"0", {}}, {"1", {}}};
  CHECK(CodeOf([&] { EntityF1(gold, Doc{{"0", {}}}); }) ==
        ErrorCode::kSentenceIdMismatch);
  CHECK(CodeOf([&] { EntityF1(gold, Doc{{"0", {}}, {"2", {}}}); }) ==
        ErrorCode::kSentenceIdMismatch);
  CHECK(CodeOf([&] { EntityF1(gold, Doc{{"0", {}}, {"0", {}}}); }) ==
        ErrorCode::kSentenceIdMismatch);
  CHECK(CodeOf([&] { MentionF1(gold, Doc{{"1", {}}}); }) ==
        ErrorCode::kSentenceIdMismatch);
}

TEST_CASE("mention f1 examples") {
  const Doc gold = {{"0", {{0, 1, "A"}, {2, 4, "B"}, {5, 6, "A"}}}};
  CHECK(MentionF1(gold, Doc{{"0", {{0, 1, "B"}, {2, 4, "A"}, {5, 6, "B"}}}}) == 1.0);
  CHECK(MentionF1(gold, Doc{{"0", {}}}) == 0.0);
  CHECK(MentionF1(gold, Doc{{"0", {{0, 1, "A"}, {2, 4, "A"}, {7, 8, "A"}}}}) ==
        doctest::Approx(2.0 / 3.0));
}

TEST_CASE("f1 properties") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const Doc gold = RandomDoc(rng, 1 + static_cast<int>(rng.Below(6)));
    const Doc pred = Corrupt(rng, gold);
    const auto r = EntityF1(gold, pred);
    for (double v : {r.macro_f1, r.micro_f1, r.mention_f1, r.micro_precision,
                     r.micro_recall}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(r.mention_f1 >= r.micro_f1 - 1e-12);

    Doc gold_perm = gold, pred_perm = pred;
    rng.Shuffle(gold_perm);
    rng.Shuffle(pred_perm);
    CHECK(ReportToJson(EntityF1(gold_perm, pred_perm)) == ReportToJson(r));

    // Doubling every span of one label leaves each per-label F1 alone.
    Doc gold2 = gold, pred2 = pred;
    for (Doc *doc : {&gold2, &pred2}) {
      for (auto &s : *doc) {
        const auto original = s.spans;
        for (const auto &span : original) {
          if (span.label == "A") s.spans.push_back(span);
        }
      }
    }
    const auto r2 = EntityF1(gold2, pred2);
    CHECK(r2.macro_f1 == doctest::Approx(r.macro_f1));
    for (const auto &[label, scores] : r.per_label) {
      CHECK(r2.per_label.at(label).f1 == doctest::Approx(scores.f1));
    }

    // Renaming a label consistently leaves the report's values alone.
    Doc gold3 = gold, pred3 = pred;
    for (Doc *doc : {&gold3, &pred3}) {
      for (auto &s : *doc) {
        for (auto &span : s.spans) {
          if (span.label == "A") span.label = "Q";
        }
      }
    }
    const auto r3 = EntityF1(gold3, pred3);
    CHECK(r3.macro_f1 == doctest::Approx(r.macro_f1));
    CHECK(r3.micro_f1 == r.micro_f1);
  }
}

TEST_CASE("report json") {
  const Doc gold = {{"0", {{0, 1, "A"}}}};
  const auto j = ReportToJson(EntityF1(gold, gold));
  CHECK(j["macro_f1"] == 1.0);
  CHECK(j["per_label"]["A"]["true_positive"] == 1);
  CHECK(j.contains("mention_f1"));
  CHECK(j.contains("micro_f1"));
}

TEST_CASE("char iou") {
  CHECK(CharIou("paris", "paris") == 1.0);
  CHECK(CharIou("abc", "xyz") == 0.0);
  CHECK(CharIou("aab", "ab") == doctest::Approx(2.0 / 3.0));
  CHECK(CharIou("", "") == 0.0);
  CHECK(CharIou("", "a") == 0.0);
  CHECK(CharIou("ab", "ba") == 1.0);
  CHECK(CharIou("a b", "ab") == doctest::Approx(2.0 / 3.0));
  CHECK(CharIou("東京", "京都") == doctest::Approx(1.0 / 3.0));
  CHECK(CharIou("A", "a") == 0.0);

  Rng rng(3);
  const std::string alphabet = "aab c";
  auto random_string = [&] {
    std::string s;
    const size_t n = rng.Below(6);
    for (size_t i = 0; i < n; ++i) s += alphabet[rng.Below(alphabet.size())];
    return s;
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string a = random_string(), b = random_string();
    const double iou = CharIou(a, b);
    CHECK(iou == CharIou(b, a));
    std::string sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    CHECK((iou == 1.0) == (!a.empty() && sa == sb));
  }
}

TEST_CASE("iou histogram") {
  SUBCASE("hand binning") {
    const std::vector<double> values = {0.1, 0.1, 0.6, 1.0};
    const auto h = IouHistogramOf(values, 2);
    CHECK(h.counts == std::vector<int>{2, 2});
    CHECK(h.bin_edges == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(h.samples == 4);
  }
  SUBCASE("identical pairs land in the last bin") {
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"paris", "paris"}, {"york", "york"}};
    const auto h = IouReport(pairs, 10);
    CHECK(h.counts.back() == 2);
    CHECK(h.samples == 2);
  }
  SUBCASE("no samples") {
    const auto h = IouReport({}, 4);
    CHECK(h.counts == std::vector<int>(4, 0));
    CHECK(h.bin_edges.size() == 5);
  }
  SUBCASE("bins") {
    CHECK(CodeOf([] { IouReport({}, 0); }) == ErrorCode::kInvalidArgument);
  }
  SUBCASE("tsv") {
    const std::vector<double> values = {0.1, 0.9};
    CHECK(HistogramToTsv(IouHistogramOf(values, 2)) ==
          "bin_lo\tbin_hi\tcount\n0.0000\t0.5000\t1\n0.5000\t1.0000\t1\n");
  }
}

}  // namespace
}  // namespace kbner
