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

#ifndef KBNER_CHECKSUM_H_
#define KBNER_CHECKSUM_H_

#include <string>
#include <string_view>

namespace kbner {

// CRC-32 of `bytes` as 8 lowercase hex digits.
std::string Crc32Hex(std::string_view bytes);

}  // namespace kbner

#endif  // KBNER_CHECKSUM_H_
