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

#ifndef KBNER_UTF8_H_
#define KBNER_UTF8_H_

#include <string>
#include <string_view>

namespace kbner {
namespace utf8 {

// Decodes UTF-8 into codepoints. Invalid bytes decode to U+FFFD so that
// offsets stay well defined on dirty input.
std::u32string Decode(std::string_view text);

std::string Encode(std::u32string_view text);
void Append(char32_t cp, std::string *out);

// Number of codepoints in `text`.
size_t Length(std::string_view text);

// Codepoint-indexed substring [begin, end).
std::string Slice(std::string_view text, size_t begin, size_t end);

bool IsSpace(char32_t cp);

}  // namespace utf8
}  // namespace kbner

#endif  // KBNER_UTF8_H_
