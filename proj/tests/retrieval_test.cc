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

#include <sstream>

#include "doctest.h"
#include "kbner/retrieval.h"
#include "kbner/random.h"
#include "oracles.h"
#include "test_util.h"

namespace kbner {
namespace {

using testing::CodeOf;
using Tokens = std::vector<std::string>;

KbIndex FromJsonl(const std::string &text) {
  std::istringstream in(text);
  return KbIndex::Build(IngestCorpus(in));
}

const char kJobsCorpus[] =
    R"({"id":"jobs","title":"Steve Jobs","paragraph":"<e:Steve Jobs>Steve Jobs</e> founded <e:Apple_inc>Apple</e>. He was born in San Francisco.","language":"en"})"
    "\n"
    R"({"id":"apple","title":"Apple Inc","paragraph":"<e:Apple_inc>Apple</e> designs phones. It is based in Cupertino.","language":"en"})"
    "\n"
    R"({"id":"pie","title":"Apple pie","paragraph":"An apple pie is a dessert.","language":"en"})"
    "\n";

RetrievedContext JobsContext() {
  RetrievedContext ctx;
  ctx.title = "Steve Jobs";
  ctx.text = "<e:Steve Jobs>Steve Jobs</e> founded <e:Apple_inc>Apple</e>";
  const auto parsed = ParseAnchorMarkup(ctx.text);
  ctx.plain = parsed.plain;
  ctx.anchors = parsed.anchors;
  ctx.source_doc_id = "jobs#0";
  return ctx;
}

RetrievedContext PlainContext(const std::string &title, const std::string &text,
                              int rank) {
  RetrievedContext ctx;
  ctx.title = title;
  ctx.text = ctx.plain = text;
  ctx.rank = rank;
  ctx.source_doc_id = title + "#0";
  return ctx;
}

TEST_CASE("sentence retrieval") {
  const KbIndex index = FromJsonl(kJobsCorpus);
  SUBCASE("self retrieval") {
    const Tokens tokens = {"An", "apple", "pie", "is", "a", "dessert", "."};
    const auto hits = SentenceRetrieve(index, tokens, 10);
    REQUIRE(!hits.empty());
    CHECK(hits[0].doc_id == "pie#0");
  }
  SUBCASE("no shared term") {
    const Tokens tokens = {"zzz", "qqq"};
    CHECK(SentenceRetrieve(index, tokens, 10).empty());
  }
  SUBCASE("query with no terms falls back to nothing") {
    const Tokens tokens = {"...", "!"};
    CHECK(SentenceRetrieve(index, tokens, 10).empty());
  }
  SUBCASE("k=3 over partially matching docs equals brute force") {
    const Tokens tokens = {"apple", "is", "in", "san", "francisco"};
    const auto hits = SentenceRetrieve(index, tokens, 3);
    const auto want =
        oracle::BruteForceSearch(index.docs(), Field::kSentence, "apple is in san francisco", 3);
    REQUIRE(hits.size() == want.size());
    CHECK(hits.size() == 3);
    for (size_t i = 0; i < hits.size(); ++i) CHECK(hits[i].doc_id == want[i].doc_id);
  }
}

TEST_CASE("entity retrieval") {
  const KbIndex index = FromJsonl(kJobsCorpus);
  const Tokens two = {"Steve Jobs", "Apple"};
  CHECK(EntityQuery(two) == "Steve Jobs|Apple");
  const Tokens one = {"Apple"};
  CHECK(EntityQuery(one) == "Apple");
  const auto hits = EntityRetrieve(index, two, 10);
  REQUIRE(!hits.empty());
  CHECK(index.doc(hits[0].ordinal).title == "Steve Jobs");
  CHECK(CodeOf([&] { EntityRetrieve(index, Tokens{}, 10); }) == ErrorCode::kNoMentions);
}

TEST_CASE("context processing options") {
  const KbIndex index = FromJsonl(kJobsCorpus);
  const KbDocument &doc = index.doc(*index.Ordinal("jobs#0"));
  SUBCASE("para keeps the marked paragraph verbatim") {
    const auto ctx = ProcessContext(doc, ContextOption::kPara);
    CHECK(ctx.text == doc.paragraph_marked);
    CHECK(ctx.title == "Steve Jobs");
    CHECK(ctx.anchors.size() == 2);
  }
  SUBCASE("sent re-renders the sentence anchors") {
    const auto ctx = ProcessContext(doc, ContextOption::kSent);
    CHECK(ctx.text == "<e:Steve Jobs>Steve Jobs</e> founded <e:Apple_inc>Apple</e>.");
    CHECK(ctx.anchors.size() == 2);
    CHECK(ctx.anchors[1].start == 19);
  }
  SUBCASE("sent-nolink strips anchors") {
    const auto ctx = ProcessContext(doc, ContextOption::kSentNoLink);
    CHECK(ctx.text.find("<e:") == std::string::npos);
    CHECK(ctx.anchors.empty());
    CHECK(ctx.text == "Steve Jobs founded Apple.");
  }
  SUBCASE("sent on the second sentence has no anchors") {
    const auto ctx =
        ProcessContext(index.doc(*index.Ordinal("jobs#1")), ContextOption::kSent);
    CHECK(ctx.text == "He was born in San Francisco.");
    CHECK(ctx.anchors.empty());
  }
  CHECK(ParseContextOption("sent-nolink") == ContextOption::kSentNoLink);
  CHECK(CodeOf([] { ParseContextOption("page"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("contexts keep rank order and drop duplicate documents") {
  const KbIndex index = FromJsonl(kJobsCorpus);
  const uint32_t a = *index.Ordinal("pie#0");
  const uint32_t b = *index.Ordinal("apple#0");
  const std::vector<ScoredDoc> hits = {
      {"apple#0", 2.0, 2, b}, {"pie#0", 3.0, 1, a}, {"pie#0", 1.0, 3, a}};
  const auto ctxs = ToContexts(index, hits, ContextOption::kSentNoLink);
  REQUIRE(ctxs.size() == 2);
  CHECK(ctxs[0].source_doc_id == "pie#0");
  CHECK(ctxs[0].rank == 1);
  CHECK(ctxs[0].score == 3.0);
  CHECK(ctxs[1].source_doc_id == "apple#0");
  CHECK(ctxs[1].rank == 2);
}

TEST_CASE("iterative retrieval") {
  const KbIndex index = FromJsonl(kJobsCorpus);
  const Tokens tokens = {"apple", "is", "in", "cupertino"};
  RetrievalConfig config;
  config.k = 3;
  config.option = ContextOption::kSent;
  const auto turn0 = ToContexts(index, SentenceRetrieve(index, tokens, 3), config.option);

  SUBCASE("T=0 equals sentence retrieval") {
    config.turns = 0;
    int calls = 0;
    const auto r = IterativeRetrieve(index, tokens, [&](const AugmentedInput &) {
      ++calls;
      return std::vector<EntitySpan>{};
    }, config);
    CHECK(r.contexts == turn0);
    CHECK(r.entity_turns == 0);
    CHECK(calls == 0);
  }
  SUBCASE("no predicted mentions keeps turn 0 and stops") {
    config.turns = 2;
    int calls = 0;
    const auto r = IterativeRetrieve(index, tokens, [&](const AugmentedInput &) {
      ++calls;
      return std::vector<EntitySpan>{};
    }, config);
    CHECK(r.contexts == turn0);
    CHECK(r.entity_turns == 0);
    CHECK(calls == 1);
  }
  SUBCASE("each turn replaces the contexts") {
    config.turns = 2;
    int calls = 0;
    const auto r = IterativeRetrieve(index, tokens, [&](const AugmentedInput &in) {
      ++calls;
      CHECK(in.tokens == tokens);
      return std::vector<EntitySpan>{{0, 1, "ORG"}};
    }, config);
    CHECK(calls == 2);
    CHECK(r.entity_turns == 2);
    const Tokens mention = {"apple"};
    CHECK(r.contexts ==
          ToContexts(index, EntityRetrieve(index, mention, 3), config.option));
  }
  SUBCASE("a mention that matches no title keeps the previous contexts") {
    config.turns = 2;
    const auto r = IterativeRetrieve(index, tokens, [&](const AugmentedInput &) {
      return std::vector<EntitySpan>{{3, 4, "LOC"}};
    }, config);
    CHECK(r.entity_turns == 0);
    CHECK(r.contexts == turn0);
  }
}

TEST_CASE("gold mentions find the titled document that sentence retrieval misses") {
  // The sentence shares many words with the distractor; only its title
  // field matches the mention.
  const KbIndex index = FromJsonl(
      R"({"id":"d","title":"Orchard","paragraph":"we picked a jaguar apple at the orchard today.","language":"en"})"
      "\n"
      R"({"id":"g","title":"Jaguar","paragraph":"A large cat of the Americas.","language":"en"})"
      "\n");
  const Tokens tokens = {"we", "saw", "a", "jaguar", "at", "the", "orchard"};
  const auto sentence_hits = SentenceRetrieve(index, tokens, 2);
  REQUIRE(!sentence_hits.empty());
  CHECK(sentence_hits[0].doc_id == "d#0");
  const auto brute = oracle::BruteForceSearch(index.docs(), Field::kSentence,
                                              "we saw a jaguar at the orchard", 2);
  CHECK(brute[0].doc_id == "d#0");

  RetrievalConfig config;
  config.turns = 1;
  const auto r = IterativeRetrieve(index, tokens, [](const AugmentedInput &) {
    return std::vector<EntitySpan>{{3, 4, "ANIMAL"}};
  }, config);
  REQUIRE(!r.contexts.empty());
  CHECK(r.contexts[0].title == "Jaguar");
  CHECK(r.entity_turns == 1);
}

TEST_CASE("mention retrieval falls back to sentence retrieval") {
  const KbIndex index = FromJsonl(kJobsCorpus);
  RetrievalConfig config;
  const Tokens tokens = {"apple", "designs", "phones"};
  const auto fallback = MentionRetrieve(index, tokens, Tokens{}, config);
  CHECK(fallback ==
        ToContexts(index, SentenceRetrieve(index, tokens, config.k), config.option));
  const auto gold = MentionRetrieve(index, tokens, Tokens{"Steve Jobs"}, config);
  REQUIRE(!gold.empty());
  CHECK(gold[0].title == "Steve Jobs");
}

TEST_CASE("augment packs contexts into the budget") {
  const Tokens tokens = {"Steve", "Jobs", "founded", "Apple"};
  SUBCASE("everything fits") {
    const auto in = Augment(tokens, {PlainContext("A", "one two", 1),
                                     PlainContext("B", "three", 2)},
                            512);
    CHECK(in.contexts.size() == 2);
    CHECK(in.TotalTokens() == 4 + (1 + 3) + (1 + 2));
    CHECK(in.features.size() == tokens.size());
  }
  SUBCASE("first context truncated to the remaining room") {
    // Title (1 token) + 8 text tokens = 9; room after the separator is 5.
    const auto in = Augment(
        tokens, {PlainContext("T", "a b c d e f g h", 1), PlainContext("U", "x", 2)},
        4 + 1 + 5);
    REQUIRE(in.contexts.size() == 1);
    CHECK(ContextTokenCount(in.contexts[0]) == 5);
    CHECK(in.contexts[0].plain == "a b c d");
    CHECK(in.TotalTokens() == 10);
  }
  SUBCASE("later ranks come later regardless of input order") {
    const auto in = Augment(tokens, {PlainContext("B", "x", 2), PlainContext("A", "y", 1)}, 512);
    CHECK(in.contexts[0].title == "A");
  }
  SUBCASE("sentence longer than the budget") {
    CHECK(CodeOf([&] { Augment(tokens, {}, 3); }) == ErrorCode::kBudgetTooSmall);
  }
  SUBCASE("a context with no room for text is dropped") {
    const auto in = Augment(tokens, {PlainContext("Long Title", "text", 1)}, 4 + 1 + 2);
    CHECK(in.contexts.empty());
  }
  SUBCASE("anchors cut by the budget are dropped") {
    RetrievedContext ctx = JobsContext();  // 2 title + 4 text tokens
    const auto in = Augment(tokens, {ctx}, 4 + 1 + 2 + 2);
    REQUIRE(in.contexts.size() == 1);
    CHECK(in.contexts[0].plain == "Steve Jobs");
    REQUIRE(in.contexts[0].anchors.size() == 1);
    CHECK(in.contexts[0].anchors[0].surface == "Steve Jobs");
    CHECK(in.contexts[0].text == "<e:Steve Jobs>Steve Jobs</e>");
    const auto mid = Augment(tokens, {ctx}, 4 + 1 + 2 + 1);
    REQUIRE(mid.contexts.size() == 1);
    CHECK(mid.contexts[0].anchors.empty());
    CHECK(mid.contexts[0].text == "Steve");
  }
}

TEST_CASE("property: augment never exceeds the budget") {
  Rng rng(31);
  const std::vector<std::string> words = {"a", "bb", "c", "dd", "e"};
  for (int trial = 0; trial < 500; ++trial) {
    Tokens tokens;
    const size_t n = 1 + rng.Below(6);
    for (size_t i = 0; i < n; ++i) tokens.push_back(rng.Pick(words));
    std::vector<RetrievedContext> ctxs;
    const size_t m = rng.Below(5);
    for (size_t c = 0; c < m; ++c) {
      std::string text;
      const size_t len = 1 + rng.Below(10);
      for (size_t i = 0; i < len; ++i) text += rng.Pick(words) + " ";
      ctxs.push_back(PlainContext("t" + std::to_string(c), text, static_cast<int>(c) + 1));
    }
    const int budget = static_cast<int>(n + rng.Below(30));
    const auto in = Augment(tokens, ctxs, budget);
    CHECK(in.TotalTokens() <= budget);
    CHECK(in.features.size() == n);
    for (size_t c = 0; c < in.contexts.size(); ++c) {
      CHECK(in.contexts[c].rank == static_cast<int>(c) + 1);
    }
  }
}

TEST_CASE("context flags") {
  const Tokens tokens = {"Steve", "Jobs", "founded", "Apple"};
  SUBCASE("anchors of the example context") {
    const std::vector<RetrievedContext> ctxs = {JobsContext()};
    const auto f = ComputeContextFeatures(tokens, ctxs);
    for (int i : {0, 1, 3}) {
      CHECK(f[i].Has(ContextFlag::kAnchorExact));
      CHECK(f[i].Has(ContextFlag::kAnchorPartial));
      CHECK(f[i].Has(ContextFlag::kContextToken));
    }
    CHECK(f[0].Has(ContextFlag::kTitleMatch));
    CHECK(!f[3].Has(ContextFlag::kTitleMatch));
    ContextFlags only_text;
    only_text.Set(ContextFlag::kContextToken);
    CHECK(f[2] == only_text);
  }
  SUBCASE("no contexts, no flags") {
    for (const auto &f : ComputeContextFeatures(tokens, {})) CHECK(f.empty());
  }
  SUBCASE("partial anchor match is not exact") {
    const Tokens some = {"Jobs", "said"};
    const std::vector<RetrievedContext> ctxs = {JobsContext()};
    const auto f = ComputeContextFeatures(some, ctxs);
    CHECK(f[0].Has(ContextFlag::kAnchorPartial));
    CHECK(!f[0].Has(ContextFlag::kAnchorExact));
    CHECK(f[1].empty());
  }
  SUBCASE("matching is case-insensitive") {
    const Tokens lower = {"steve", "jobs"};
    const std::vector<RetrievedContext> ctxs = {JobsContext()};
    const auto f = ComputeContextFeatures(lower, ctxs);
    CHECK(f[0].Has(ContextFlag::kAnchorExact));
    CHECK(f[1].Has(ContextFlag::kTitleMatch));
  }
}

TEST_CASE("property: flags do not depend on context order") {
  Rng rng(32);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 300; ++trial) {
    Tokens tokens;
    for (size_t i = 0, n = 1 + rng.Below(6); i < n; ++i) tokens.push_back(rng.Pick(words));
    std::vector<RetrievedContext> ctxs;
    for (size_t c = 0, m = rng.Below(4); c < m; ++c) {
      std::string marked;
      for (size_t i = 0, len = 1 + rng.Below(5); i < len; ++i) {
        if (!marked.empty()) marked += ' ';
        marked += rng.Bernoulli(0.3) ? "<e:X>" + rng.Pick(words) + " " + rng.Pick(words) + "</e>"
                                     : rng.Pick(words);
      }
      RetrievedContext ctx;
      ctx.title = rng.Pick(words);
      ctx.text = marked;
      const auto parsed = ParseAnchorMarkup(marked);
      ctx.plain = parsed.plain;
      ctx.anchors = parsed.anchors;
      ctxs.push_back(ctx);
    }
    const auto base = ComputeContextFeatures(tokens, ctxs);
    rng.Shuffle(ctxs);
    CHECK(ComputeContextFeatures(tokens, ctxs) == base);
  }
}

TEST_CASE("retrieval config validation") {
  RetrievalConfig c;
  CHECK(c.k == 10);
  CHECK(c.turns == 2);
  CHECK(c.token_budget == 512);
  c.k = 0;
  CHECK(CodeOf([&] { c.Validate(); }) == ErrorCode::kInvalidArgument);
  c.k = 1;
  c.turns = -1;
  CHECK(CodeOf([&] { c.Validate(); }) == ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace kbner
