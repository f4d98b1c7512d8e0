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

#ifndef KBNER_CORPUS_H_
#define KBNER_CORPUS_H_

#include <compare>
#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kbner {

// A hyperlinked surface inside a plain-text string. Offsets are codepoint
// offsets into the plain text, half-open.
struct Anchor {
  std::string surface;
  std::string target_title;
  size_t start = 0;
  size_t end = 0;

  bool operator==(const Anchor &) const = default;
};

// One searchable unit of the knowledge base: a single sentence of a wiki
// paragraph, together with the paragraph it came from.
struct KbDocument {
  std::string doc_id;
  std::string title;
  std::string sentence;          // plain text
  std::string paragraph_marked;  // with <e:TITLE>SURFACE</e> markup
  std::string paragraph_plain;
  std::vector<Anchor> anchors;   // relative to paragraph_plain
  std::string language;
  // Codepoint range of `sentence` inside `paragraph_plain`.
  size_t sentence_start = 0;
  size_t sentence_end = 0;

  bool operator==(const KbDocument &) const = default;
};

struct MarkupParse {
  std::string plain;
  std::vector<Anchor> anchors;
};

// Strips `<e:TITLE>SURFACE</e>` markers. Throws MalformedMarkup on
// unclosed, nested, stray or empty-titled markers.
MarkupParse ParseAnchorMarkup(std::string_view text);

// Inverse of ParseAnchorMarkup. Anchors must be sorted, non-overlapping and
// agree with `plain`; otherwise throws InconsistentAnchor.
std::string RenderAnchorMarkup(std::string_view plain,
                               std::span<const Anchor> anchors);

// Anchors that lie fully inside [begin, end), shifted to be relative to
// `begin`.
std::vector<Anchor> AnchorsWithin(std::span<const Anchor> anchors,
                                  size_t begin, size_t end);

struct SentenceRange {
  size_t start;
  size_t end;
};

// Codepoint ranges of the sentences of `plain`, whitespace-trimmed. A
// sentence ends after '.', '!', '?', '؟' or '।' followed by whitespace or
// the end of text, or after '。'. Boundaries inside an anchor are skipped.
std::vector<SentenceRange> SplitSentences(std::string_view plain,
                                          std::span<const Anchor> anchors);

// Reads corpus JSONL ({"id","title","paragraph","language"} per line) and
// returns one document per sentence, with doc_id "<id>#<ordinal>".
std::vector<KbDocument> IngestCorpus(std::istream &in);

// --- labeled data ---------------------------------------------------------

bool IsValidTag(std::string_view tag);

// Entity type of a B-/I- tag; empty for "O".
std::string_view TagLabel(std::string_view tag);

class LabeledSentence {
 public:
  LabeledSentence() = default;
  // Throws EmptySentence, BadTag, or InvalidArgument on length mismatch.
  LabeledSentence(std::vector<std::string> tokens,
                  std::vector<std::string> tags);

  const std::vector<std::string> &tokens() const { return tokens_; }
  const std::vector<std::string> &tags() const { return tags_; }
  size_t size() const { return tokens_.size(); }

  bool operator==(const LabeledSentence &) const = default;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> tags_;
};

std::vector<LabeledSentence> ParseConll(std::istream &in);

struct EntitySpan {
  int start = 0;
  int end = 0;  // exclusive
  std::string label;

  int length() const { return end - start; }
  bool Overlaps(const EntitySpan &other) const {
    return start < other.end && other.start < end;
  }
  auto operator<=>(const EntitySpan &) const = default;
};

// Orphan I- tags (no open span of the same type) start a new span.
std::vector<EntitySpan> SpansFromBio(std::span<const std::string> tags);

// Throws OverlapError when spans overlap and InvalidArgument when a span
// falls outside [0, n).
std::vector<std::string> BioFromSpans(std::span<const EntitySpan> spans,
                                      int n);

// Surface text of a span: its tokens joined by single spaces.
std::string SpanText(std::span<const std::string> tokens,
                     const EntitySpan &span);

}  // namespace kbner

#endif  // KBNER_CORPUS_H_
