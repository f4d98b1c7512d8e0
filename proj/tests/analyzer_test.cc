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

#include "doctest.h"
#include "kbner/analyzer.h"
#include "kbner/utf8.h"

namespace kbner {
namespace {

using Terms = std::vector<std::string>;

TEST_CASE("analyzer lowercases and splits on punctuation") {
  CHECK(TokenizeForIndex("Steve Jobs founded Apple.") ==
        Terms{"steve", "jobs", "founded", "apple"});
  CHECK(TokenizeForIndex("").empty());
  CHECK(TokenizeForIndex("...!?").empty());
  CHECK(TokenizeForIndex("state-of-the-art, (really)") ==
        Terms{"state", "of", "the", "art", "really"});
}

TEST_CASE("Han and kana become single-character terms") {
  CHECK(TokenizeForIndex("乔布斯") == Terms{"乔", "布", "斯"});
  CHECK(TokenizeForIndex("東京タワー2") == Terms{"東", "京", "タ", "ワ", "ー", "2"});
  CHECK(TokenizeForIndex("ab乔cd") == Terms{"ab", "乔", "cd"});
}

TEST_CASE("case folding beyond ASCII") {
  CHECK(TokenizeForIndex("ÉCOLE Straße ΑΘΗΝΑ МОСКВА") ==
        Terms{"école", "straße", "αθηνα", "москва"});
  CHECK(FoldCase(U'Ｐ') == U'ｐ');
  CHECK(FoldCase(U'乔') == U'乔');
}

TEST_CASE("scripts without case pass through") {
  CHECK(TokenizeForIndex("नमस्ते दुनिया") == Terms{"नमस्ते", "दुनिया"});
  CHECK(TokenizeForIndex("বাংলা।") == Terms{"বাংলা"});
}

TEST_CASE("unicode whitespace and punctuation separate terms") {
  CHECK(TokenizeForIndex("a b　c\u2014d") == Terms{"a", "b", "c", "d"});
  CHECK(TokenizeForIndex("「日本」") == Terms{"日", "本"});
}

TEST_CASE("normalize for match joins analyzer terms") {
  CHECK(NormalizeForMatch("  Steve   JOBS! ") == "steve jobs");
  CHECK(NormalizeForMatch("--").empty());
}

TEST_CASE("utf8 helpers") {
  CHECK(utf8::Length("aé乔") == 3);
  CHECK(utf8::Slice("aé乔b", 1, 3) == "é乔");
  CHECK(utf8::Encode(utf8::Decode("héllo 乔")) == "héllo 乔");
  // Invalid bytes decode to the replacement character.
  CHECK(utf8::Decode("a\xffz") == std::u32string{U'a', 0xFFFD, U'z'});
}

TEST_CASE("analyzer is deterministic and terms hold no whitespace") {
  const std::string text = "Ünïcode ТЕКСТ 乔布斯, tabs\tand\nnewlines";
  const Terms a = TokenizeForIndex(text);
  CHECK(a == TokenizeForIndex(text));
  for (const std::string &t : a) {
    CHECK(!t.empty());
    for (char32_t cp : utf8::Decode(t)) CHECK(!utf8::IsSpace(cp));
  }
}

}  // namespace
}  // namespace kbner
