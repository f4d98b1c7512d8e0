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

#ifndef KBNER_SYNTHETIC_H_
#define KBNER_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

namespace kbner {

// Parameters of the generated benchmark. Ambiguous entities have a
// single-word surface that is also used as an ordinary word (tag O); only
// the knowledge base tells the two readings apart.
struct SyntheticSpec {
  int entities = 50;
  std::vector<std::string> labels = {"PER", "LOC", "CORP", "CW"};
  int docs_per_entity = 4;
  double ambiguity = 0.5;  // fraction of entities with an O reading
  int train_sentences = 500;
  int test_sentences = 200;
  uint64_t seed = 42;

  // Throws InvalidArgument.
  void Validate() const;
};

struct SyntheticEntity {
  std::string title;
  std::string surface;  // lowercase, space separated
  std::string label;
  bool ambiguous = false;
};

struct SyntheticData {
  std::string corpus_jsonl;
  std::string train_conll;
  std::string test_conll;
  std::vector<SyntheticEntity> entities;
};

// Deterministic given spec.seed. The corpus holds entities * docs_per_entity
// paragraphs, each titled by its entity; every sentence about an entity
// anchors its surface, while the ordinary-word reading of an ambiguous
// surface appears unanchored in paragraphs of other entities. Train and
// test sentences are fresh (not copied from the corpus). Words that tell
// the readings apart never sit next to the mention.
SyntheticData GenerateSynthetic(const SyntheticSpec &spec);

}  // namespace kbner

#endif  // KBNER_SYNTHETIC_H_
