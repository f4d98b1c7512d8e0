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

#ifndef KBNER_RETRIEVAL_H_
#define KBNER_RETRIEVAL_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kbner/corpus.h"
#include "kbner/index.h"

namespace kbner {

// How a retrieved document becomes context text.
enum class ContextOption {
  kPara,        // the whole marked paragraph
  kSent,        // the matched sentence, anchors kept
  kSentNoLink,  // the matched sentence, anchors stripped
};

std::string_view ContextOptionName(ContextOption option);
// Accepts "para", "sent", "sent-nolink".
ContextOption ParseContextOption(std::string_view name);

struct RetrievedContext {
  std::string title;
  std::string text;   // marked for kPara/kSent, plain for kSentNoLink
  std::string plain;  // `text` with markup removed
  std::vector<Anchor> anchors;  // relative to `plain`
  std::string source_doc_id;
  int rank = 1;
  double score = 0.0;

  bool operator==(const RetrievedContext &) const = default;
};

enum class ContextFlag : uint8_t {
  kAnchorExact = 1 << 0,
  kAnchorPartial = 1 << 1,
  kTitleMatch = 1 << 2,
  kContextToken = 1 << 3,
};

inline constexpr ContextFlag kAllContextFlags[] = {
    ContextFlag::kAnchorExact, ContextFlag::kAnchorPartial,
    ContextFlag::kTitleMatch, ContextFlag::kContextToken};

std::string_view ContextFlagName(ContextFlag flag);

class ContextFlags {
 public:
  constexpr ContextFlags() = default;

  bool Has(ContextFlag f) const { return (bits_ & static_cast<uint8_t>(f)); }
  void Set(ContextFlag f) { bits_ |= static_cast<uint8_t>(f); }
  bool empty() const { return bits_ == 0; }
  uint8_t bits() const { return bits_; }

  bool operator==(const ContextFlags &) const = default;

 private:
  uint8_t bits_ = 0;
};

struct RetrievalConfig {
  int k = 10;
  int turns = 2;  // entity-retrieval turns after the sentence query
  ContextOption option = ContextOption::kPara;
  int token_budget = 512;

  // Throws InvalidArgument.
  void Validate() const;
};

// The input sentence together with its (budget-truncated) contexts and the
// per-token flags derived from them.
struct AugmentedInput {
  std::vector<std::string> tokens;
  std::vector<RetrievedContext> contexts;
  int token_budget = 0;
  std::vector<ContextFlags> features;  // one per token

  // Sentence tokens + one separator per context + context tokens.
  int TotalTokens() const;
};

// Sentence-field search with the tokens joined by spaces. A query with no
// searchable terms yields no results.
std::vector<ScoredDoc> SentenceRetrieve(const KbIndex &index,
                                        std::span<const std::string> tokens,
                                        int k);

// Mentions joined with "|".
std::string EntityQuery(std::span<const std::string> mentions);

// Title-field search for the mention disjunction. Throws NoMentions for an
// empty list.
std::vector<ScoredDoc> EntityRetrieve(const KbIndex &index,
                                      std::span<const std::string> mentions,
                                      int k);

RetrievedContext ProcessContext(const KbDocument &doc, ContextOption option);

// Processes hits in rank order, dropping repeated doc_ids (first rank wins)
// and renumbering ranks from 1.
std::vector<RetrievedContext> ToContexts(const KbIndex &index,
                                         std::span<const ScoredDoc> hits,
                                         ContextOption option);

using Predictor =
    std::function<std::vector<EntitySpan>(const AugmentedInput &)>;

struct IterativeResult {
  std::vector<RetrievedContext> contexts;
  int entity_turns = 0;  // turns whose entity query replaced the contexts
};

// Turn 0 retrieves by sentence; each further turn predicts mentions on the
// current augmented input and retrieves by title. A turn without mentions
// (or without hits) keeps the previous contexts and ends the loop.
IterativeResult IterativeRetrieve(const KbIndex &index,
                                  std::span<const std::string> tokens,
                                  const Predictor &predictor,
                                  const RetrievalConfig &config);

// Entity retrieval with known mentions (gold annotations at training time).
// Falls back to sentence retrieval when there are no mentions or no hits.
std::vector<RetrievedContext> MentionRetrieve(
    const KbIndex &index, std::span<const std::string> tokens,
    std::span<const std::string> mentions, const RetrievalConfig &config);

// Whitespace token count of a context: title tokens then text tokens.
int ContextTokenCount(const RetrievedContext &context);

// Greedily packs contexts in rank order into the token budget; the first
// context that does not fit is cut at a token boundary (anchors crossing
// the cut are dropped) and the rest are discarded. Throws BudgetTooSmall
// when the sentence alone exceeds the budget.
AugmentedInput Augment(std::span<const std::string> tokens,
                       std::vector<RetrievedContext> contexts,
                       int token_budget);

std::vector<ContextFlags> ComputeContextFeatures(
    std::span<const std::string> tokens,
    std::span<const RetrievedContext> contexts);

}  // namespace kbner

#endif  // KBNER_RETRIEVAL_H_
