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

#include "kbner/index.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kbner/analyzer.h"
#include "kbner/checksum.h"
#include "kbner/error.h"

namespace kbner {

namespace {

constexpr char kMagic[8] = {'K', 'B', 'N', 'R', 'I', 'D', 'X', '\0'};

double TermWeight(uint32_t df, size_t n, uint32_t tf, uint32_t len,
                  double avg_len, const Bm25Params &p) {
  const double idf = std::log(1.0 + (static_cast<double>(n) - df + 0.5) /
                                        (df + 0.5));
  const double norm = p.k1 * (1.0 - p.b + p.b * len / avg_len);
  return idf * (tf * (p.k1 + 1.0)) / (tf + norm);
}

std::vector<std::string> Distinct(std::span<const std::string> terms) {
  std::vector<std::string> out(terms.begin(), terms.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> FieldText(const KbDocument &doc, Field field) {
  return TokenizeForIndex(field == Field::kSentence ? doc.sentence
                                                    : doc.title);
}

// --- binary encoding ---

class Writer {
 public:
  void U8(uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void Bytes(std::string_view s) { out_.append(s); }
  const std::string &str() const { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string name)
      : data_(data), name_(std::move(name)) {}

  uint8_t U8() {
    Need(1);
    return static_cast<uint8_t>(data_[pos_++]);
  }
  uint32_t U32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(U8()) << (8 * i);
    return v;
  }
  uint64_t U64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(U8()) << (8 * i);
    return v;
  }
  std::string Bytes(size_t n) {
    Need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == data_.size(); }

 private:
  void Need(size_t n) {
    if (pos_ + n > data_.size()) {
      throw Error(ErrorCode::kCorruptFile, name_ + " is truncated");
    }
  }

  std::string_view data_;
  std::string name_;
  size_t pos_ = 0;
};

std::string EncodeField(const FieldIndex &index) {
  Writer w;
  w.Bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.U32(KbIndex::kFormatVersion);
  w.U8(static_cast<uint8_t>(index.field));
  w.U32(static_cast<uint32_t>(index.doc_lengths.size()));
  for (uint32_t len : index.doc_lengths) w.U32(len);
  w.U64(std::bit_cast<uint64_t>(index.avg_doc_length));
  w.U32(static_cast<uint32_t>(index.postings.size()));
  for (const auto &[term, list] : index.postings) {
    w.U32(static_cast<uint32_t>(term.size()));
    w.Bytes(term);
    w.U32(static_cast<uint32_t>(list.size()));
    for (const Posting &p : list) {
      w.U32(p.doc);
      w.U32(p.tf);
    }
  }
  return w.str();
}

FieldIndex DecodeField(std::string_view data, const std::string &name) {
  Reader r(data, name);
  if (r.Bytes(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw Error(ErrorCode::kCorruptFile, name + " has a bad magic number");
  }
  const uint32_t version = r.U32();
  if (version != KbIndex::kFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                name + " has format version " + std::to_string(version) +
                    ", expected " + std::to_string(KbIndex::kFormatVersion));
  }
  FieldIndex index;
  const uint8_t field = r.U8();
  if (field > 1) throw Error(ErrorCode::kCorruptFile, name + ": bad field");
  index.field = static_cast<Field>(field);
  const uint32_t n = r.U32();
  index.doc_lengths.resize(n);
  for (auto &len : index.doc_lengths) len = r.U32();
  index.avg_doc_length = std::bit_cast<double>(r.U64());
  const uint32_t num_terms = r.U32();
  for (uint32_t t = 0; t < num_terms; ++t) {
    std::string term = r.Bytes(r.U32());
    std::vector<Posting> list(r.U32());
    uint32_t prev = 0;
    for (size_t i = 0; i < list.size(); ++i) {
      list[i].doc = r.U32();
      list[i].tf = r.U32();
      if (list[i].doc >= n || (i > 0 && list[i].doc <= prev) ||
          list[i].tf == 0) {
        throw Error(ErrorCode::kCorruptFile, name + ": bad posting list");
      }
      prev = list[i].doc;
    }
    index.postings.emplace(std::move(term), std::move(list));
  }
  if (!r.AtEnd()) {
    throw Error(ErrorCode::kCorruptFile, name + " has trailing bytes");
  }
  return index;
}

std::string ReadFile(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path &path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

nlohmann::json DocToJson(const KbDocument &doc) {
  return {{"doc_id", doc.doc_id},
          {"title", doc.title},
          {"sentence", doc.sentence},
          {"paragraph", doc.paragraph_marked},
          {"language", doc.language},
          {"sentence_start", doc.sentence_start},
          {"sentence_end", doc.sentence_end}};
}

KbDocument DocFromJson(const nlohmann::json &j) {
  KbDocument doc;
  doc.doc_id = j.at("doc_id").get<std::string>();
  doc.title = j.at("title").get<std::string>();
  doc.sentence = j.at("sentence").get<std::string>();
  doc.paragraph_marked = j.at("paragraph").get<std::string>();
  doc.language = j.at("language").get<std::string>();
  doc.sentence_start = j.at("sentence_start").get<size_t>();
  doc.sentence_end = j.at("sentence_end").get<size_t>();
  MarkupParse parsed = ParseAnchorMarkup(doc.paragraph_marked);
  doc.paragraph_plain = std::move(parsed.plain);
  doc.anchors = std::move(parsed.anchors);
  return doc;
}

}  // namespace

std::string_view FieldName(Field field) {
  return field == Field::kSentence ? "sentence" : "title";
}

Field ParseField(std::string_view name) {
  if (name == "sentence") return Field::kSentence;
  if (name == "title") return Field::kTitle;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown field '" + std::string(name) + "'");
}

uint32_t FieldIndex::DocFrequency(const std::string &term) const {
  auto it = postings.find(term);
  return it == postings.end() ? 0 : static_cast<uint32_t>(it->second.size());
}

uint32_t FieldIndex::TermFrequency(const std::string &term,
                                   uint32_t doc) const {
  auto it = postings.find(term);
  if (it == postings.end()) return 0;
  const auto &list = it->second;
  auto p = std::lower_bound(
      list.begin(), list.end(), doc,
      [](const Posting &posting, uint32_t d) { return posting.doc < d; });
  return (p != list.end() && p->doc == doc) ? p->tf : 0;
}

KbIndex KbIndex::Build(std::vector<KbDocument> docs) {
  KbIndex index;
  std::sort(docs.begin(), docs.end(),
            [](const KbDocument &a, const KbDocument &b) {
              return a.doc_id < b.doc_id;
            });
  for (size_t i = 0; i < docs.size(); ++i) {
    if (i > 0 && docs[i].doc_id == docs[i - 1].doc_id) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate doc_id '" + docs[i].doc_id + "'");
    }
    index.ordinals_.emplace(docs[i].doc_id, static_cast<uint32_t>(i));
  }
  index.docs_ = std::move(docs);
  index.BuildFields();
  return index;
}

void KbIndex::BuildFields() {
  for (Field field : {Field::kSentence, Field::kTitle}) {
    FieldIndex &fi = field == Field::kSentence ? sentence_ : title_;
    fi = FieldIndex{};
    fi.field = field;
    fi.doc_lengths.reserve(docs_.size());
    uint64_t total = 0;
    for (uint32_t ord = 0; ord < docs_.size(); ++ord) {
      const auto terms = FieldText(docs_[ord], field);
      std::map<std::string, uint32_t> counts;
      for (const auto &t : terms) ++counts[t];
      for (const auto &[term, tf] : counts) {
        fi.postings[term].push_back({ord, tf});
      }
      fi.doc_lengths.push_back(static_cast<uint32_t>(terms.size()));
      total += terms.size();
    }
    fi.avg_doc_length =
        docs_.empty() ? 0.0 : static_cast<double>(total) / docs_.size();
  }
}

std::optional<uint32_t> KbIndex::Ordinal(const std::string &doc_id) const {
  auto it = ordinals_.find(doc_id);
  if (it == ordinals_.end()) return std::nullopt;
  return it->second;
}

void KbIndex::Save(const std::string &dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string docs_jsonl;
  for (const KbDocument &doc : docs_) {
    docs_jsonl += DocToJson(doc).dump();
    docs_jsonl += '\n';
  }
  const std::string sentence_bytes = EncodeField(sentence_);
  const std::string title_bytes = EncodeField(title_);

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["doc_count"] = docs_.size();
  manifest["avg_sentence_length"] = sentence_.avg_doc_length;
  manifest["avg_title_length"] = title_.avg_doc_length;
  manifest["corpus_checksum"] = Crc32Hex(docs_jsonl);
  manifest["sentence_idx_checksum"] = Crc32Hex(sentence_bytes);
  manifest["title_idx_checksum"] = Crc32Hex(title_bytes);

  const fs::path root(dir);
  WriteFile(root / "docs.jsonl", docs_jsonl);
  WriteFile(root / "sentence.idx", sentence_bytes);
  WriteFile(root / "title.idx", title_bytes);
  WriteFile(root / "manifest.json", manifest.dump(2) + "\n");
}

KbIndex KbIndex::Load(const std::string &dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadFile(root / "manifest.json"));
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kCorruptFile,
                std::string("manifest.json: ") + e.what());
  }
  uint32_t version = 0;
  std::string corpus_sum, sentence_sum, title_sum;
  size_t doc_count = 0;
  try {
    version = manifest.at("format_version").get<uint32_t>();
    corpus_sum = manifest.at("corpus_checksum").get<std::string>();
    sentence_sum = manifest.at("sentence_idx_checksum").get<std::string>();
    title_sum = manifest.at("title_idx_checksum").get<std::string>();
    doc_count = manifest.at("doc_count").get<size_t>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kCorruptFile,
                std::string("manifest.json: ") + e.what());
  }
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "index format version " + std::to_string(version) +
                    ", expected " + std::to_string(kFormatVersion));
  }

  const std::string docs_jsonl = ReadFile(root / "docs.jsonl");
  const std::string sentence_bytes = ReadFile(root / "sentence.idx");
  const std::string title_bytes = ReadFile(root / "title.idx");
  if (Crc32Hex(docs_jsonl) != corpus_sum ||
      Crc32Hex(sentence_bytes) != sentence_sum ||
      Crc32Hex(title_bytes) != title_sum) {
    throw Error(ErrorCode::kCorruptFile, "index checksum mismatch in " + dir);
  }

  KbIndex index;
  std::istringstream lines(docs_jsonl);
  std::string line;
  while (std::getline(lines, line)) {
    try {
      index.docs_.push_back(DocFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorCode::kCorruptFile,
                  std::string("docs.jsonl: ") + e.what());
    }
  }
  for (uint32_t i = 0; i < index.docs_.size(); ++i) {
    index.ordinals_.emplace(index.docs_[i].doc_id, i);
  }
  index.sentence_ = DecodeField(sentence_bytes, "sentence.idx");
  index.title_ = DecodeField(title_bytes, "title.idx");
  if (index.docs_.size() != doc_count ||
      index.sentence_.doc_count() != doc_count ||
      index.title_.doc_count() != doc_count ||
      index.sentence_.field != Field::kSentence ||
      index.title_.field != Field::kTitle) {
    throw Error(ErrorCode::kCorruptFile, "index files disagree on layout");
  }
  return index;
}

std::vector<std::string> QueryTerms(std::string_view query) {
  return Distinct(TokenizeForIndex(query));
}

double Bm25Score(std::span<const std::string> query_terms, uint32_t doc,
                 const FieldIndex &index, const Bm25Params &params) {
  if (doc >= index.doc_count()) {
    throw Error(ErrorCode::kUnknownDocument,
                "document ordinal " + std::to_string(doc) + " not in index");
  }
  double score = 0.0;
  for (const std::string &term : Distinct(query_terms)) {
    const uint32_t tf = index.TermFrequency(term, doc);
    if (tf == 0) continue;
    score += TermWeight(index.DocFrequency(term), index.doc_count(), tf,
                        index.doc_lengths[doc], index.avg_doc_length, params);
  }
  return score;
}

std::vector<ScoredDoc> Search(const KbIndex &index, Field field,
                              std::string_view query, int k,
                              const Bm25Params &params) {
  if (k < 1) {
    throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  }
  const std::vector<std::string> terms = QueryTerms(query);
  if (terms.empty()) {
    throw Error(ErrorCode::kEmptyQueryAfterAnalysis,
                "query '" + std::string(query) + "' has no searchable terms");
  }
  const FieldIndex &fi = index.field(field);

  // Term-at-a-time accumulation in sorted term order, so each document's
  // score is summed in the same order Bm25Score uses.
  std::unordered_map<uint32_t, double> acc;
  for (const std::string &term : terms) {
    auto it = fi.postings.find(term);
    if (it == fi.postings.end()) continue;
    const auto df = static_cast<uint32_t>(it->second.size());
    for (const Posting &p : it->second) {
      acc[p.doc] += TermWeight(df, fi.doc_count(), p.tf,
                               fi.doc_lengths[p.doc], fi.avg_doc_length,
                               params);
    }
  }

  std::vector<std::pair<double, uint32_t>> hits;
  hits.reserve(acc.size());
  for (const auto &[doc, score] : acc) {
    if (score > 0.0) hits.emplace_back(score, doc);
  }
  // Ordinals follow doc_id order, so ordinal ascending breaks ties by doc_id.
  auto better = [](const auto &a, const auto &b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  const size_t keep = std::min(hits.size(), static_cast<size_t>(k));
  std::partial_sort(hits.begin(), hits.begin() + keep, hits.end(), better);
  hits.resize(keep);

  std::vector<ScoredDoc> out;
  out.reserve(keep);
  for (size_t i = 0; i < keep; ++i) {
    out.push_back({index.doc(hits[i].second).doc_id, hits[i].first,
                   static_cast<int>(i + 1), hits[i].second});
  }
  return out;
}

}  // namespace kbner
