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

#ifndef KBNER_FEATURES_H_
#define KBNER_FEATURES_H_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kbner/retrieval.h"

namespace kbner {

// Explicit feature-name dictionary. Ids are assigned in first-seen order.
class FeatureMap {
 public:
  std::optional<int> Find(std::string_view name) const;
  int Intern(const std::string &name);

  const std::vector<std::string> &names() const { return names_; }
  size_t size() const { return names_.size(); }

  bool operator==(const FeatureMap &other) const {
    return names_ == other.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

// Sparse vector: (feature id, value) pairs sorted by id, ids unique.
using FeatureVector = std::vector<std::pair<int, double>>;

// Feature strings of token `i`: bias, identity, lowercase form, shape,
// prefixes and suffixes up to 3, lowercase neighbours, and the context
// flags of the token and its neighbours.
std::vector<std::string> TokenFeatureNames(const AugmentedInput &input,
                                           size_t i);

// Word shape: uppercase -> 'X', other letters -> 'x', digits -> 'd',
// anything else kept as is. "Paris" -> "Xxxxx".
std::string WordShape(std::string_view token);

// One vector per sentence token. With frozen = true unseen names are
// dropped and `map` is not modified.
std::vector<FeatureVector> ExtractFeatures(const AugmentedInput &input,
                                           FeatureMap &map, bool frozen);
std::vector<FeatureVector> ExtractFeatures(const AugmentedInput &input,
                                           const FeatureMap &map);

}  // namespace kbner

#endif  // KBNER_FEATURES_H_
