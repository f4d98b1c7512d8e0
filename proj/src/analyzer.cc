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

#include "kbner/analyzer.h"

#include "kbner/utf8.h"

namespace kbner {

char32_t FoldCase(char32_t cp) {
  if (cp < 0x80) return (cp >= U'A' && cp <= U'Z') ? cp + 32 : cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp == 0x130) return U'i';
  if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177)) {
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) {
    return (cp % 2 == 1) ? cp + 1 : cp;
  }
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  if (cp >= 0x531 && cp <= 0x556) return cp + 48;
  if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 32;
  return cp;
}

bool IsCjk(char32_t cp) {
  return (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0x4E00 && cp <= 0x9FFF) ||
         (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2FA1F) ||
         (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0x31F0 && cp <= 0x31FF);
}

bool IsSeparator(char32_t cp) {
  if (utf8::IsSpace(cp)) return true;
  if (cp < 0x80) {
    const bool alnum = (cp >= U'0' && cp <= U'9') ||
                       (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
    return !alnum;
  }
  if (cp >= 0x80 && cp <= 0xBF) return cp != 0xAA && cp != 0xB5 && cp != 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;  // general punctuation
  if (cp >= 0x20A0 && cp <= 0x20CF) return true;  // currency
  if (cp >= 0x2190 && cp <= 0x2BFF) return true;  // arrows, math, shapes
  if (cp >= 0x3000 && cp <= 0x303F) return true;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE6F) return true;
  if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
      (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
    return true;
  }
  switch (cp) {
    case 0x055A: case 0x055B: case 0x055C: case 0x055D: case 0x055E:
    case 0x055F: case 0x0589: case 0x05BE: case 0x05C0: case 0x05C3:
    case 0x05C6: case 0x05F3: case 0x05F4: case 0x060C: case 0x061B:
    case 0x061F: case 0x066A: case 0x066B: case 0x066C: case 0x066D:
    case 0x06D4: case 0x0964: case 0x0965: case 0xFFFD:
      return true;
    default:
      return false;
  }
}

std::vector<std::string> TokenizeForIndex(std::string_view text) {
  std::vector<std::string> terms;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) terms.push_back(std::move(current));
    current.clear();
  };
  for (char32_t cp : utf8::Decode(text)) {
    if (IsSeparator(cp)) {
      flush();
    } else if (IsCjk(cp)) {
      flush();
      utf8::Append(cp, &current);
      flush();
    } else {
      utf8::Append(FoldCase(cp), &current);
    }
  }
  flush();
  return terms;
}

std::string NormalizeForMatch(std::string_view text) {
  std::string out;
  for (const std::string &term : TokenizeForIndex(text)) {
    if (!out.empty()) out += ' ';
    out += term;
  }
  return out;
}

}  // namespace kbner
