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

#include "kbner/synthetic.h"

#include <cmath>
#include <numeric>
#include <set>
#include <span>

#include "json.hpp"
#include "kbner/error.h"
#include "kbner/random.h"

namespace kbner {

namespace {

const std::vector<std::string> kSyllables = {
    "ka", "lo", "mi", "ren", "tu", "sa", "vi", "no", "del", "par", "qui",
    "zen", "ba", "mor", "fi", "gal", "hu", "jin", "ko", "lem", "ny", "os",
    "pe", "ri", "sho", "ta", "ul", "ve", "wa", "xi", "yo", "zu"};

const std::vector<std::string> kFillers = {
    "the", "of", "and", "a", "in", "to", "was", "is", "for", "on", "with",
    "by", "at", "from"};

constexpr int kTopicsPerSense = 4;
constexpr int kSentencesPerParagraph = 3;

class WordFactory {
 public:
  explicit WordFactory(Rng *rng) : rng_(rng) {}

  std::string Fresh() {
    for (;;) {
      std::string word;
      const size_t syllables = 2 + rng_->Below(2);
      for (size_t i = 0; i < syllables; ++i) word += rng_->Pick(kSyllables);
      if (used_.insert(word).second) return word;
    }
  }

 private:
  Rng *rng_;
  std::set<std::string> used_;
};

// One reading of a surface: an entity (label set) or the plain word.
struct Sense {
  std::vector<std::string> surface;
  std::vector<std::string> topics;
  std::string label;  // empty for the ordinary-word reading
  std::string title;  // entity title; empty for the ordinary-word reading
};

struct Item {
  const Sense *sense;
  bool anchored;
};

struct Built {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::string marked;
};

std::string Capitalize(const std::string &word) {
  std::string out = word;
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] -= 32;
  return out;
}

Built BuildSentence(std::span<const Item> items, int topic_count, Rng &rng) {
  Built b;
  std::vector<std::string> pieces;  // marked pieces, joined by spaces
  auto plain = [&](const std::string &token) {
    b.tokens.push_back(token);
    b.tags.push_back("O");
    pieces.push_back(token);
  };
  auto fillers = [&](size_t count) {
    for (size_t i = 0; i < count; ++i) plain(rng.Pick(kFillers));
  };

  for (size_t k = 0; k < items.size(); ++k) {
    const Sense &sense = *items[k].sense;
    if (k > 0) plain("and");
    std::vector<std::string> topics = sense.topics;
    rng.Shuffle(topics);

    if (rng.Bernoulli(0.5)) fillers(1);
    plain(topics[0]);
    fillers(1 + rng.Below(2));

    std::string surface;
    for (size_t w = 0; w < sense.surface.size(); ++w) {
      b.tokens.push_back(sense.surface[w]);
      if (sense.label.empty()) {
        b.tags.push_back("O");
      } else {
        b.tags.push_back((w == 0 ? "B-" : "I-") + sense.label);
      }
      if (w > 0) surface += ' ';
      surface += sense.surface[w];
    }
    if (items[k].anchored) {
      pieces.push_back("<e:" + sense.title + ">" + surface + "</e>");
    } else {
      pieces.push_back(surface);
    }

    fillers(1 + rng.Below(2));
    plain(topics[1]);
    if (topic_count >= 3) {
      fillers(1);
      plain(topics[2]);
    }
  }
  plain(".");
  for (size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0) b.marked += ' ';
    b.marked += pieces[i];
  }
  return b;
}

void AppendConll(const Built &b, std::string *out) {
  for (size_t i = 0; i < b.tokens.size(); ++i) {
    *out += b.tokens[i];
    *out += '\t';
    *out += b.tags[i];
    *out += '\n';
  }
  *out += '\n';
}

}  // namespace

void SyntheticSpec::Validate() const {
  if (entities < 1 || docs_per_entity < 1 || train_sentences < 1 ||
      test_sentences < 1) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic counts must be >= 1");
  }
  if (!(ambiguity >= 0.0 && ambiguity <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ambiguity must be in [0, 1]");
  }
  if (labels.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "label set is empty");
  }
}

SyntheticData GenerateSynthetic(const SyntheticSpec &spec) {
  spec.Validate();
  Rng rng(spec.seed);
  WordFactory words(&rng);
  const int n = spec.entities;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.Shuffle(order);
  const int num_ambiguous =
      static_cast<int>(std::lround(spec.ambiguity * n));
  std::vector<bool> ambiguous(n, false);
  for (int i = 0; i < num_ambiguous; ++i) ambiguous[order[i]] = true;

  SyntheticData data;
  std::vector<Sense> entity_senses(n);
  std::vector<Sense> word_senses(n);  // used only for ambiguous entities
  for (int e = 0; e < n; ++e) {
    Sense &s = entity_senses[e];
    const size_t len = ambiguous[e] ? 1 : 1 + rng.Below(2);
    for (size_t w = 0; w < len; ++w) s.surface.push_back(words.Fresh());
    for (int t = 0; t < kTopicsPerSense; ++t) s.topics.push_back(words.Fresh());
    s.label = spec.labels[e % spec.labels.size()];
    for (size_t w = 0; w < len; ++w) {
      if (w > 0) s.title += ' ';
      s.title += Capitalize(s.surface[w]);
    }
    if (ambiguous[e]) {
      Sense &o = word_senses[e];
      o.surface = s.surface;
      for (int t = 0; t < kTopicsPerSense; ++t) {
        o.topics.push_back(words.Fresh());
      }
    }
    SyntheticEntity entity;
    entity.title = s.title;
    entity.label = s.label;
    entity.ambiguous = ambiguous[e];
    for (size_t w = 0; w < len; ++w) {
      if (w > 0) entity.surface += ' ';
      entity.surface += s.surface[w];
    }
    data.entities.push_back(std::move(entity));
  }

  // Paragraph p belongs to entity p / docs_per_entity.
  const int dpe = spec.docs_per_entity;
  std::vector<std::vector<std::string>> paragraphs(size_t(n) * dpe);
  for (int e = 0; e < n; ++e) {
    for (int j = 0; j < dpe; ++j) {
      for (int s = 0; s < kSentencesPerParagraph; ++s) {
        const Item item{&entity_senses[e], true};
        paragraphs[size_t(e) * dpe + j].push_back(
            BuildSentence({&item, 1}, 3, rng).marked);
      }
    }
  }
  // Ordinary-word sentences go round-robin into other entities' paragraphs.
  size_t cursor = 0;
  for (int e = 0; e < n; ++e) {
    if (!ambiguous[e] || n == 1) continue;
    for (int s = 0; s < kSentencesPerParagraph * dpe; ++s) {
      while (static_cast<int>(cursor % paragraphs.size()) / dpe == e) {
        ++cursor;
      }
      auto &para = paragraphs[cursor % paragraphs.size()];
      ++cursor;
      const Item item{&word_senses[e], false};
      const size_t at = rng.Below(para.size() + 1);
      para.insert(para.begin() + static_cast<long>(at),
                  BuildSentence({&item, 1}, 3, rng).marked);
    }
  }
  for (size_t p = 0; p < paragraphs.size(); ++p) {
    const int e = static_cast<int>(p) / dpe;
    char id[32];
    std::snprintf(id, sizeof(id), "p%04d-%02d", e, static_cast<int>(p) % dpe);
    std::string text;
    for (const std::string &sentence : paragraphs[p]) {
      if (!text.empty()) text += ' ';
      text += sentence;
    }
    nlohmann::ordered_json line;
    line["id"] = id;
    line["title"] = entity_senses[e].title;
    line["paragraph"] = text;
    line["language"] = "en";
    data.corpus_jsonl += line.dump();
    data.corpus_jsonl += '\n';
  }

  auto labeled = [&](int count, std::string *out) {
    for (int i = 0; i < count; ++i) {
      const int items = (n > 1 && rng.Bernoulli(0.3)) ? 2 : 1;
      std::vector<Item> chosen;
      int first = -1;
      for (int k = 0; k < items; ++k) {
        int e;
        do {
          e = static_cast<int>(rng.Below(n));
        } while (e == first);
        first = e;
        const bool word_reading = ambiguous[e] && rng.Bernoulli(0.5);
        chosen.push_back(
            {word_reading ? &word_senses[e] : &entity_senses[e], false});
      }
      AppendConll(BuildSentence(chosen, 2, rng), out);
    }
  };
  labeled(spec.train_sentences, &data.train_conll);
  labeled(spec.test_sentences, &data.test_conll);
  return data;
}

}  // namespace kbner
