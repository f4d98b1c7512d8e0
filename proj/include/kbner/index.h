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

#ifndef KBNER_INDEX_H_
#define KBNER_INDEX_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kbner/corpus.h"

namespace kbner {

enum class Field { kSentence, kTitle };

std::string_view FieldName(Field field);
// Accepts "sentence" or "title"; throws InvalidArgument otherwise.
Field ParseField(std::string_view name);

struct Posting {
  uint32_t doc;  // ordinal
  uint32_t tf;

  bool operator==(const Posting &) const = default;
};

// Inverted index over one field. Postings are sorted strictly by ordinal.
struct FieldIndex {
  Field field = Field::kSentence;
  std::map<std::string, std::vector<Posting>> postings;
  std::vector<uint32_t> doc_lengths;
  double avg_doc_length = 0.0;

  size_t doc_count() const { return doc_lengths.size(); }
  uint32_t DocFrequency(const std::string &term) const;
  uint32_t TermFrequency(const std::string &term, uint32_t doc) const;

  bool operator==(const FieldIndex &) const = default;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
  int rank = 0;  // 1-based
  uint32_t ordinal = 0;
};

// The knowledge base: documents ordered by doc_id (ordinal = position) and
// one inverted index per searchable field. Immutable once built.
class KbIndex {
 public:
  static constexpr uint32_t kFormatVersion = 1;

  KbIndex() = default;

  // Throws DuplicateId.
  static KbIndex Build(std::vector<KbDocument> docs);

  // On-disk layout: manifest.json, sentence.idx, title.idx, docs.jsonl.
  void Save(const std::string &dir) const;
  // Throws VersionMismatch or CorruptFile.
  static KbIndex Load(const std::string &dir);

  const FieldIndex &field(Field f) const {
    return f == Field::kSentence ? sentence_ : title_;
  }
  const std::vector<KbDocument> &docs() const { return docs_; }
  const KbDocument &doc(uint32_t ordinal) const { return docs_.at(ordinal); }
  std::optional<uint32_t> Ordinal(const std::string &doc_id) const;
  size_t size() const { return docs_.size(); }

 private:
  void BuildFields();

  std::vector<KbDocument> docs_;
  std::unordered_map<std::string, uint32_t> ordinals_;
  FieldIndex sentence_;
  FieldIndex title_;
};

// Lucene-style BM25 over the distinct query terms:
//   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
//   score  = sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg))
// Throws UnknownDocument when `doc` is not in the index.
double Bm25Score(std::span<const std::string> query_terms, uint32_t doc,
                 const FieldIndex &index, const Bm25Params &params = {});

// Top-k documents with score > 0, by score descending then doc_id
// ascending. Throws EmptyQueryAfterAnalysis when the query has no terms.
std::vector<ScoredDoc> Search(const KbIndex &index, Field field,
                              std::string_view query, int k,
                              const Bm25Params &params = {});

// Sorted distinct analyzer terms of `query`.
std::vector<std::string> QueryTerms(std::string_view query);

}  // namespace kbner

#endif  // KBNER_INDEX_H_
