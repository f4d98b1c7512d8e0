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

#include "kbner/corpus.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "kbner/error.h"
#include "kbner/utf8.h"

namespace kbner {

namespace {

constexpr std::string_view kOpenPrefix = "<e:";
constexpr std::string_view kClose = "</e>";

bool IsContinuationByte(char c) {
  return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

size_t CountCodepoints(std::string_view s) {
  size_t n = 0;
  for (char c : s) {
    if (!IsContinuationByte(c)) ++n;
  }
  return n;
}

[[noreturn]] void Malformed(size_t byte_pos, const std::string &what) {
  throw Error(ErrorCode::kMalformedMarkup,
              what + " at byte " + std::to_string(byte_pos));
}

[[noreturn]] void Inconsistent(const std::string &what) {
  throw Error(ErrorCode::kInconsistentAnchor, what);
}

bool IsSentenceTerminator(char32_t cp) {
  return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'؟' || cp == U'।';
}

std::vector<std::string> SplitFields(std::string_view line) {
  std::vector<std::string> fields;
  std::istringstream ss{std::string(line)};
  std::string field;
  while (ss >> field) fields.push_back(field);
  return fields;
}

}  // namespace

MarkupParse ParseAnchorMarkup(std::string_view text) {
  MarkupParse out;
  size_t plain_len = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    if (text.substr(pos, kOpenPrefix.size()) == kOpenPrefix) {
      const size_t header_end = text.find('>', pos + kOpenPrefix.size());
      if (header_end == std::string_view::npos) {
        Malformed(pos, "unterminated anchor header");
      }
      std::string_view title =
          text.substr(pos + kOpenPrefix.size(),
                      header_end - pos - kOpenPrefix.size());
      if (title.empty()) Malformed(pos, "empty anchor title");
      if (title.find('<') != std::string_view::npos) {
        Malformed(pos, "'<' inside anchor title");
      }
      const size_t close = text.find(kClose, header_end + 1);
      if (close == std::string_view::npos) Malformed(pos, "unclosed anchor");
      std::string_view surface =
          text.substr(header_end + 1, close - header_end - 1);
      if (surface.find(kOpenPrefix) != std::string_view::npos) {
        Malformed(pos, "nested anchor");
      }
      if (surface.empty()) Malformed(pos, "empty anchor surface");
      Anchor anchor;
      anchor.surface = std::string(surface);
      anchor.target_title = std::string(title);
      anchor.start = plain_len;
      plain_len += CountCodepoints(surface);
      anchor.end = plain_len;
      out.plain.append(surface);
      out.anchors.push_back(std::move(anchor));
      pos = close + kClose.size();
    } else if (text.substr(pos, kClose.size()) == kClose) {
      Malformed(pos, "closing marker without opening marker");
    } else {
      if (!IsContinuationByte(text[pos])) ++plain_len;
      out.plain.push_back(text[pos]);
      ++pos;
    }
  }
  return out;
}

std::string RenderAnchorMarkup(std::string_view plain,
                               std::span<const Anchor> anchors) {
  if (plain.find(kOpenPrefix) != std::string_view::npos ||
      plain.find(kClose) != std::string_view::npos) {
    Inconsistent("plain text contains markup characters");
  }
  const std::u32string cps = utf8::Decode(plain);
  std::string out;
  size_t cursor = 0;
  for (const Anchor &a : anchors) {
    if (a.start >= a.end || a.end > cps.size()) {
      Inconsistent("anchor range [" + std::to_string(a.start) + "," +
                   std::to_string(a.end) + ") out of bounds");
    }
    if (a.start < cursor) {
      Inconsistent("anchors overlap or are unsorted at offset " +
                   std::to_string(a.start));
    }
    if (a.target_title.empty() ||
        a.target_title.find_first_of("<>") != std::string::npos) {
      Inconsistent("invalid anchor title '" + a.target_title + "'");
    }
    std::string slice = utf8::Encode(
        std::u32string_view(cps).substr(a.start, a.end - a.start));
    if (slice != a.surface) {
      Inconsistent("anchor surface '" + a.surface +
                   "' does not match text '" + slice + "'");
    }
    out += utf8::Encode(
        std::u32string_view(cps).substr(cursor, a.start - cursor));
    out += "<e:";
    out += a.target_title;
    out += ">";
    out += slice;
    out += kClose;
    cursor = a.end;
  }
  out += utf8::Encode(std::u32string_view(cps).substr(cursor));
  return out;
}

std::vector<Anchor> AnchorsWithin(std::span<const Anchor> anchors,
                                  size_t begin, size_t end) {
  std::vector<Anchor> out;
  for (const Anchor &a : anchors) {
    if (a.start >= begin && a.end <= end) {
      Anchor shifted = a;
      shifted.start -= begin;
      shifted.end -= begin;
      out.push_back(std::move(shifted));
    }
  }
  return out;
}

std::vector<SentenceRange> SplitSentences(std::string_view plain,
                                          std::span<const Anchor> anchors) {
  const std::u32string cps = utf8::Decode(plain);
  auto inside_anchor = [&](size_t boundary) {
    for (const Anchor &a : anchors) {
      if (boundary > a.start && boundary < a.end) return true;
    }
    return false;
  };

  std::vector<size_t> boundaries;
  for (size_t i = 0; i < cps.size(); ++i) {
    const bool ends = cps[i] == U'。' ||
                      (IsSentenceTerminator(cps[i]) &&
                       (i + 1 == cps.size() || utf8::IsSpace(cps[i + 1])));
    if (ends && !inside_anchor(i + 1)) boundaries.push_back(i + 1);
  }
  if (boundaries.empty() || boundaries.back() != cps.size()) {
    boundaries.push_back(cps.size());
  }

  std::vector<SentenceRange> out;
  size_t begin = 0;
  for (size_t boundary : boundaries) {
    size_t s = begin;
    size_t e = boundary;
    while (s < e && utf8::IsSpace(cps[s])) ++s;
    while (e > s && utf8::IsSpace(cps[e - 1])) --e;
    if (s < e) out.push_back({s, e});
    begin = boundary;
  }
  return out;
}

std::vector<KbDocument> IngestCorpus(std::istream &in) {
  std::vector<KbDocument> docs;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorCode::kParseError, where + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kParseError, where + "expected a JSON object");
    }
    auto field = [&](const char *name) {
      auto it = obj.find(name);
      if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::kParseError,
                    where + "missing string field \"" + name + "\"");
      }
      return it->get<std::string>();
    };
    const std::string id = field("id");
    const std::string title = field("title");
    const std::string paragraph = field("paragraph");
    const std::string language = field("language");
    if (title.empty()) {
      throw Error(ErrorCode::kParseError, where + "empty title");
    }
    if (!seen_ids.insert(id).second) {
      throw Error(ErrorCode::kDuplicateId, where + "duplicate id '" + id + "'");
    }

    MarkupParse parsed;
    try {
      parsed = ParseAnchorMarkup(paragraph);
    } catch (const Error &e) {
      throw Error(e.code(), where + e.what());
    }

    const auto sentences = SplitSentences(parsed.plain, parsed.anchors);
    for (size_t ordinal = 0; ordinal < sentences.size(); ++ordinal) {
      KbDocument doc;
      doc.doc_id = id + "#" + std::to_string(ordinal);
      doc.title = title;
      doc.sentence = utf8::Slice(parsed.plain, sentences[ordinal].start,
                                 sentences[ordinal].end);
      doc.paragraph_marked = paragraph;
      doc.paragraph_plain = parsed.plain;
      doc.anchors = parsed.anchors;
      doc.language = language;
      doc.sentence_start = sentences[ordinal].start;
      doc.sentence_end = sentences[ordinal].end;
      docs.push_back(std::move(doc));
    }
  }
  return docs;
}

bool IsValidTag(std::string_view tag) {
  if (tag == "O") return true;
  if (tag.size() < 3) return false;
  if ((tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') return false;
  return true;
}

std::string_view TagLabel(std::string_view tag) {
  if (tag.size() < 3) return {};
  return tag.substr(2);
}

LabeledSentence::LabeledSentence(std::vector<std::string> tokens,
                                 std::vector<std::string> tags)
    : tokens_(std::move(tokens)), tags_(std::move(tags)) {
  if (tokens_.empty()) {
    throw Error(ErrorCode::kEmptySentence, "sentence has no tokens");
  }
  if (tokens_.size() != tags_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "token/tag count mismatch: " + std::to_string(tokens_.size()) +
                    " vs " + std::to_string(tags_.size()));
  }
  for (const std::string &tag : tags_) {
    if (!IsValidTag(tag)) {
      throw Error(ErrorCode::kBadTag, "invalid BIO tag '" + tag + "'");
    }
  }
}

std::vector<LabeledSentence> ParseConll(std::istream &in) {
  std::vector<LabeledSentence> out;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  auto flush = [&] {
    if (!tokens.empty()) out.emplace_back(std::move(tokens), std::move(tags));
    tokens.clear();
    tags.clear();
  };

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = SplitFields(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    // '#' lines are comments unless they look like a token line for the
    // literal token "#...".
    if (line[0] == '#' && (fields.size() < 2 || !IsValidTag(fields.back()))) {
      continue;
    }
    if (fields[0] == "-DOCSTART-") {
      flush();
      continue;
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() < 2) {
      throw Error(ErrorCode::kParseError, where + "token line without a tag");
    }
    if (!IsValidTag(fields.back())) {
      throw Error(ErrorCode::kBadTag,
                  where + "invalid BIO tag '" + fields.back() + "'");
    }
    tokens.push_back(fields.front());
    tags.push_back(fields.back());
  }
  flush();
  return out;
}

std::vector<EntitySpan> SpansFromBio(std::span<const std::string> tags) {
  std::vector<EntitySpan> spans;
  int open_start = -1;
  std::string open_label;
  auto close = [&](int end) {
    if (open_start >= 0) spans.push_back({open_start, end, open_label});
    open_start = -1;
    open_label.clear();
  };
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const std::string &tag = tags[i];
    if (!IsValidTag(tag)) {
      throw Error(ErrorCode::kBadTag, "invalid BIO tag '" + tag + "'");
    }
    if (tag == "O") {
      close(i);
      continue;
    }
    const std::string_view label = TagLabel(tag);
    if (tag[0] == 'I' && open_start >= 0 && open_label == label) continue;
    close(i);
    open_start = i;
    open_label = std::string(label);
  }
  close(static_cast<int>(tags.size()));
  return spans;
}

std::vector<std::string> BioFromSpans(std::span<const EntitySpan> spans,
                                      int n) {
  std::vector<EntitySpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::string> tags(static_cast<size_t>(std::max(n, 0)), "O");
  int last_end = 0;
  for (const EntitySpan &s : sorted) {
    if (s.start < 0 || s.start >= s.end || s.end > n || s.label.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "span [" + std::to_string(s.start) + "," +
                      std::to_string(s.end) + ") invalid for length " +
                      std::to_string(n));
    }
    if (s.start < last_end) {
      throw Error(ErrorCode::kOverlapError,
                  "span at " + std::to_string(s.start) +
                      " overlaps a previous span");
    }
    tags[s.start] = "B-" + s.label;
    for (int i = s.start + 1; i < s.end; ++i) tags[i] = "I-" + s.label;
    last_end = s.end;
  }
  return tags;
}

std::string SpanText(std::span<const std::string> tokens,
                     const EntitySpan &span) {
  std::string out;
  for (int i = span.start; i < span.end; ++i) {
    if (i > span.start) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace kbner
