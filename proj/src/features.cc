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

#include "kbner/features.h"

#include <algorithm>

#include "kbner/analyzer.h"
#include "kbner/utf8.h"

namespace kbner {

namespace {

std::u32string LowerCodepoints(std::string_view token) {
  std::u32string cps = utf8::Decode(token);
  for (char32_t &cp : cps) cp = FoldCase(cp);
  return cps;
}

void AddFlagFeatures(const ContextFlags &flags, std::string_view prefix,
                     std::vector<std::string> *out) {
  for (ContextFlag f : kAllContextFlags) {
    if (flags.Has(f)) {
      out->push_back(std::string(prefix) + std::string(ContextFlagName(f)));
    }
  }
}

FeatureVector ToVector(const std::vector<std::string> &names,
                       const FeatureMap &map) {
  FeatureVector v;
  for (const std::string &name : names) {
    if (auto id = map.Find(name)) v.emplace_back(*id, 1.0);
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(),
                      [](const auto &a, const auto &b) {
                        return a.first == b.first;
                      }),
          v.end());
  return v;
}

}  // namespace

std::optional<int> FeatureMap::Find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int FeatureMap::Intern(const std::string &name) {
  auto [it, inserted] = ids_.emplace(name, static_cast<int>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

std::string WordShape(std::string_view token) {
  std::string shape;
  for (char32_t cp : utf8::Decode(token)) {
    if (cp >= U'0' && cp <= U'9') {
      shape += 'd';
    } else if (FoldCase(cp) != cp) {
      shape += 'X';
    } else if (IsSeparator(cp)) {
      utf8::Append(cp, &shape);
    } else {
      shape += 'x';
    }
  }
  return shape;
}

std::vector<std::string> TokenFeatureNames(const AugmentedInput &input,
                                           size_t i) {
  const auto &tokens = input.tokens;
  const std::u32string lower = LowerCodepoints(tokens[i]);
  const std::string lw = utf8::Encode(lower);

  std::vector<std::string> names;
  names.reserve(20);
  names.push_back("bias");
  names.push_back("w=" + tokens[i]);
  names.push_back("lw=" + lw);
  names.push_back("shape=" + WordShape(tokens[i]));
  for (size_t k = 1; k <= 3 && k <= lower.size(); ++k) {
    names.push_back("p" + std::to_string(k) + "=" +
                    utf8::Encode(std::u32string_view(lower).substr(0, k)));
    names.push_back(
        "s" + std::to_string(k) + "=" +
        utf8::Encode(std::u32string_view(lower).substr(lower.size() - k)));
  }
  names.push_back("w-1=" + (i == 0 ? std::string("<s>")
                                   : utf8::Encode(LowerCodepoints(
                                         tokens[i - 1]))));
  names.push_back("w+1=" + (i + 1 == tokens.size()
                                ? std::string("</s>")
                                : utf8::Encode(LowerCodepoints(
                                      tokens[i + 1]))));

  if (i < input.features.size()) {
    AddFlagFeatures(input.features[i], "flag:", &names);
    if (i > 0) AddFlagFeatures(input.features[i - 1], "flag-1:", &names);
    if (i + 1 < input.features.size()) {
      AddFlagFeatures(input.features[i + 1], "flag+1:", &names);
    }
  }
  return names;
}

std::vector<FeatureVector> ExtractFeatures(const AugmentedInput &input,
                                           FeatureMap &map, bool frozen) {
  std::vector<FeatureVector> out;
  out.reserve(input.tokens.size());
  for (size_t i = 0; i < input.tokens.size(); ++i) {
    const auto names = TokenFeatureNames(input, i);
    if (!frozen) {
      for (const std::string &name : names) map.Intern(name);
    }
    out.push_back(ToVector(names, map));
  }
  return out;
}

std::vector<FeatureVector> ExtractFeatures(const AugmentedInput &input,
                                           const FeatureMap &map) {
  std::vector<FeatureVector> out;
  out.reserve(input.tokens.size());
  for (size_t i = 0; i < input.tokens.size(); ++i) {
    out.push_back(ToVector(TokenFeatureNames(input, i), map));
  }
  return out;
}

}  // namespace kbner
