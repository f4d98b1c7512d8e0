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

#include "kbner/retrieval.h"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "kbner/analyzer.h"
#include "kbner/error.h"
#include "kbner/utf8.h"

namespace kbner {

namespace {

// End offsets (codepoints) of the whitespace-separated tokens of `text`.
std::vector<size_t> TokenEnds(std::u32string_view text) {
  std::vector<size_t> ends;
  bool in_token = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const bool space = utf8::IsSpace(text[i]);
    if (in_token && space) ends.push_back(i);
    in_token = !space;
  }
  if (in_token) ends.push_back(text.size());
  return ends;
}

int CountTokens(std::string_view text) {
  return static_cast<int>(TokenEnds(utf8::Decode(text)).size());
}

std::string JoinTokens(std::span<const std::string> tokens) {
  std::string out;
  for (const std::string &t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

// Keeps the first `keep` text tokens of `ctx`.
RetrievedContext TruncateText(const RetrievedContext &ctx, int keep) {
  const std::u32string cps = utf8::Decode(ctx.plain);
  const std::vector<size_t> ends = TokenEnds(cps);
  if (keep >= static_cast<int>(ends.size())) return ctx;
  const size_t cut = ends[keep - 1];

  RetrievedContext out = ctx;
  out.plain = utf8::Encode(std::u32string_view(cps).substr(0, cut));
  out.anchors.clear();
  for (const Anchor &a : ctx.anchors) {
    if (a.end <= cut) out.anchors.push_back(a);
  }
  out.text = ctx.text == ctx.plain ? out.plain
                                   : RenderAnchorMarkup(out.plain, out.anchors);
  return out;
}

}  // namespace

std::string_view ContextOptionName(ContextOption option) {
  switch (option) {
    case ContextOption::kPara: return "para";
    case ContextOption::kSent: return "sent";
    case ContextOption::kSentNoLink: return "sent-nolink";
  }
  return "para";
}

ContextOption ParseContextOption(std::string_view name) {
  if (name == "para") return ContextOption::kPara;
  if (name == "sent") return ContextOption::kSent;
  if (name == "sent-nolink") return ContextOption::kSentNoLink;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown context option '" + std::string(name) + "'");
}

std::string_view ContextFlagName(ContextFlag flag) {
  switch (flag) {
    case ContextFlag::kAnchorExact: return "AnchorExact";
    case ContextFlag::kAnchorPartial: return "AnchorPartial";
    case ContextFlag::kTitleMatch: return "TitleMatch";
    case ContextFlag::kContextToken: return "ContextToken";
  }
  return "";
}

void RetrievalConfig::Validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (turns < 0) throw Error(ErrorCode::kInvalidArgument, "T must be >= 0");
  if (token_budget < 1) {
    throw Error(ErrorCode::kInvalidArgument, "token_budget must be >= 1");
  }
}

int AugmentedInput::TotalTokens() const {
  int total = static_cast<int>(tokens.size());
  for (const auto &ctx : contexts) total += 1 + ContextTokenCount(ctx);
  return total;
}

std::vector<ScoredDoc> SentenceRetrieve(const KbIndex &index,
                                        std::span<const std::string> tokens,
                                        int k) {
  try {
    return Search(index, Field::kSentence, JoinTokens(tokens), k);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kEmptyQueryAfterAnalysis) return {};
    throw;
  }
}

std::string EntityQuery(std::span<const std::string> mentions) {
  std::string query;
  for (size_t i = 0; i < mentions.size(); ++i) {
    if (i > 0) query += '|';
    query += mentions[i];
  }
  return query;
}

std::vector<ScoredDoc> EntityRetrieve(const KbIndex &index,
                                      std::span<const std::string> mentions,
                                      int k) {
  if (mentions.empty()) {
    throw Error(ErrorCode::kNoMentions, "entity retrieval needs mentions");
  }
  for (const std::string &m : mentions) {
    if (m.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty mention");
    }
  }
  return Search(index, Field::kTitle, EntityQuery(mentions), k);
}

RetrievedContext ProcessContext(const KbDocument &doc, ContextOption option) {
  RetrievedContext ctx;
  ctx.title = doc.title;
  ctx.source_doc_id = doc.doc_id;
  switch (option) {
    case ContextOption::kPara:
      ctx.text = doc.paragraph_marked;
      ctx.plain = doc.paragraph_plain;
      ctx.anchors = doc.anchors;
      break;
    case ContextOption::kSent:
      ctx.plain = doc.sentence;
      ctx.anchors =
          AnchorsWithin(doc.anchors, doc.sentence_start, doc.sentence_end);
      ctx.text = RenderAnchorMarkup(ctx.plain, ctx.anchors);
      break;
    case ContextOption::kSentNoLink:
      ctx.plain = doc.sentence;
      ctx.text = doc.sentence;
      break;
  }
  return ctx;
}

std::vector<RetrievedContext> ToContexts(const KbIndex &index,
                                         std::span<const ScoredDoc> hits,
                                         ContextOption option) {
  std::vector<ScoredDoc> ordered(hits.begin(), hits.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ScoredDoc &a, const ScoredDoc &b) {
                     return a.rank < b.rank;
                   });
  std::vector<RetrievedContext> out;
  std::unordered_set<std::string> seen;
  for (const ScoredDoc &hit : ordered) {
    if (!seen.insert(hit.doc_id).second) continue;
    RetrievedContext ctx = ProcessContext(index.doc(hit.ordinal), option);
    ctx.rank = static_cast<int>(out.size()) + 1;
    ctx.score = hit.score;
    out.push_back(std::move(ctx));
  }
  return out;
}

IterativeResult IterativeRetrieve(const KbIndex &index,
                                  std::span<const std::string> tokens,
                                  const Predictor &predictor,
                                  const RetrievalConfig &config) {
  config.Validate();
  IterativeResult result;
  result.contexts =
      ToContexts(index, SentenceRetrieve(index, tokens, config.k),
                 config.option);
  for (int turn = 1; turn <= config.turns; ++turn) {
    const AugmentedInput input =
        Augment(tokens, result.contexts, config.token_budget);
    std::vector<std::string> mentions;
    for (const EntitySpan &span : predictor(input)) {
      std::string text = SpanText(tokens, span);
      if (!text.empty() &&
          std::find(mentions.begin(), mentions.end(), text) ==
              mentions.end()) {
        mentions.push_back(std::move(text));
      }
    }
    if (mentions.empty()) break;
    std::vector<ScoredDoc> hits;
    try {
      hits = EntityRetrieve(index, mentions, config.k);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kEmptyQueryAfterAnalysis) throw;
    }
    if (hits.empty()) break;
    result.contexts = ToContexts(index, hits, config.option);
    ++result.entity_turns;
  }
  return result;
}

std::vector<RetrievedContext> MentionRetrieve(
    const KbIndex &index, std::span<const std::string> tokens,
    std::span<const std::string> mentions, const RetrievalConfig &config) {
  config.Validate();
  if (!mentions.empty()) {
    try {
      auto hits = EntityRetrieve(index, mentions, config.k);
      if (!hits.empty()) return ToContexts(index, hits, config.option);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kEmptyQueryAfterAnalysis) throw;
    }
  }
  return ToContexts(index, SentenceRetrieve(index, tokens, config.k),
                    config.option);
}

int ContextTokenCount(const RetrievedContext &context) {
  return CountTokens(context.title) + CountTokens(context.plain);
}

AugmentedInput Augment(std::span<const std::string> tokens,
                       std::vector<RetrievedContext> contexts,
                       int token_budget) {
  const int n = static_cast<int>(tokens.size());
  if (n > token_budget) {
    throw Error(ErrorCode::kBudgetTooSmall,
                "sentence has " + std::to_string(n) +
                    " tokens but the budget is " +
                    std::to_string(token_budget));
  }
  std::stable_sort(contexts.begin(), contexts.end(),
                   [](const RetrievedContext &a, const RetrievedContext &b) {
                     return a.rank < b.rank;
                   });

  AugmentedInput out;
  out.tokens.assign(tokens.begin(), tokens.end());
  out.token_budget = token_budget;
  int used = n;
  for (RetrievedContext &ctx : contexts) {
    const int room = token_budget - used - 1;  // one separator
    const int need = ContextTokenCount(ctx);
    if (need <= room) {
      used += 1 + need;
      out.contexts.push_back(std::move(ctx));
      continue;
    }
    const int text_room = room - CountTokens(ctx.title);
    if (text_room >= 1) {
      RetrievedContext cut = TruncateText(ctx, text_room);
      used += 1 + ContextTokenCount(cut);
      out.contexts.push_back(std::move(cut));
    }
    break;
  }
  out.features = ComputeContextFeatures(out.tokens, out.contexts);
  return out;
}

std::vector<ContextFlags> ComputeContextFeatures(
    std::span<const std::string> tokens,
    std::span<const RetrievedContext> contexts) {
  std::vector<ContextFlags> flags(tokens.size());
  if (contexts.empty()) return flags;

  std::vector<std::vector<std::string>> token_terms;
  token_terms.reserve(tokens.size());
  for (const std::string &t : tokens) {
    token_terms.push_back(TokenizeForIndex(t));
  }

  std::set<std::vector<std::string>> surfaces;
  std::unordered_set<std::string> anchor_terms;
  std::unordered_set<std::string> title_terms;
  std::unordered_set<std::string> text_terms;
  for (const RetrievedContext &ctx : contexts) {
    for (const Anchor &a : ctx.anchors) {
      auto terms = TokenizeForIndex(a.surface);
      if (terms.empty()) continue;
      anchor_terms.insert(terms.begin(), terms.end());
      surfaces.insert(std::move(terms));
    }
    for (auto &t : TokenizeForIndex(ctx.title)) title_terms.insert(t);
    for (auto &t : TokenizeForIndex(ctx.plain)) text_terms.insert(t);
  }

  auto all_in = [](const std::vector<std::string> &terms,
                   const std::unordered_set<std::string> &set) {
    return !terms.empty() &&
           std::all_of(terms.begin(), terms.end(),
                       [&](const std::string &t) { return set.count(t) > 0; });
  };

  const size_t n = tokens.size();
  for (size_t i = 0; i < n; ++i) {
    if (all_in(token_terms[i], anchor_terms)) {
      flags[i].Set(ContextFlag::kAnchorPartial);
    }
    if (all_in(token_terms[i], title_terms)) {
      flags[i].Set(ContextFlag::kTitleMatch);
    }
    if (all_in(token_terms[i], text_terms)) {
      flags[i].Set(ContextFlag::kContextToken);
    }
  }

  // Token n-grams whose concatenated terms equal a whole anchor surface.
  for (const auto &surface : surfaces) {
    for (size_t a = 0; a < n; ++a) {
      if (token_terms[a].empty()) continue;
      size_t matched = 0;
      for (size_t b = a; b < n; ++b) {
        const auto &terms = token_terms[b];
        if (matched + terms.size() > surface.size() ||
            !std::equal(terms.begin(), terms.end(),
                        surface.begin() + static_cast<long>(matched))) {
          break;
        }
        matched += terms.size();
        if (matched == surface.size()) {
          if (token_terms[b].empty()) break;
          for (size_t i = a; i <= b; ++i) {
            flags[i].Set(ContextFlag::kAnchorExact);
          }
          break;
        }
      }
    }
  }
  return flags;
}

}  // namespace kbner
