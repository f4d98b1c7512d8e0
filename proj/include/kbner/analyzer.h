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

#ifndef KBNER_ANALYZER_H_
#define KBNER_ANALYZER_H_

#include <string>
#include <string_view>
#include <vector>

namespace kbner {

// The text analyzer shared by indexing, querying and context-feature
// matching: lowercase, split on whitespace and punctuation, and emit each
// Han or kana character as its own term.
std::vector<std::string> TokenizeForIndex(std::string_view text);

// Simple case folding for Latin, Greek, Cyrillic, Armenian and fullwidth
// Latin. Other scripts pass through unchanged.
char32_t FoldCase(char32_t cp);

bool IsCjk(char32_t cp);
bool IsSeparator(char32_t cp);

// Analyzer terms joined by a single space; empty when the text has no terms.
std::string NormalizeForMatch(std::string_view text);

}  // namespace kbner

#endif  // KBNER_ANALYZER_H_
