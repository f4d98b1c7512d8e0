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

#include "kbner/predictions.h"

#include "json.hpp"
#include "kbner/error.h"

namespace kbner {

std::string WritePredictions(std::span<const SentenceSpans> sentences) {
  std::string out;
  for (const SentenceSpans &s : sentences) {
    nlohmann::ordered_json j;
    j["sentence_id"] = s.sentence_id;
    auto spans = nlohmann::ordered_json::array();
    for (const EntitySpan &span : s.spans) {
      nlohmann::ordered_json o;
      o["start"] = span.start;
      o["end"] = span.end;
      o["label"] = span.label;
      spans.push_back(std::move(o));
    }
    j["spans"] = std::move(spans);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<SentenceSpans> ReadPredictions(std::istream &in) {
  std::vector<SentenceSpans> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SentenceSpans s;
      s.sentence_id = j.at("sentence_id").get<std::string>();
      for (const auto &o : j.at("spans")) {
        EntitySpan span{o.at("start").get<int>(), o.at("end").get<int>(),
                        o.at("label").get<std::string>()};
        if (span.start < 0 || span.start >= span.end || span.label.empty()) {
          throw Error(ErrorCode::kParseError, "invalid span");
        }
        s.spans.push_back(std::move(span));
      }
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error &e) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return out;
}

std::vector<SentenceSpans> GoldSpans(std::span<const LabeledSentence> data) {
  std::vector<SentenceSpans> out;
  out.reserve(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    out.push_back({std::to_string(i), SpansFromBio(data[i].tags())});
  }
  return out;
}

}  // namespace kbner
