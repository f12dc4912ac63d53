/* Copyright 2026 The Pipelink Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PIPELINK_COMMON_TEXT_FORMAT_H_
#define PIPELINK_COMMON_TEXT_FORMAT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace pipelink {

// One whitespace-split line of a line-oriented config file.
struct TextLine {
  int number = 0;  // 1-based
  std::vector<std::string> tokens;
};

// Splits `content` into non-empty, non-comment ('#') lines.
std::vector<TextLine> TokenizeLines(std::string_view content);

absl::StatusOr<std::string> ReadFileToString(const std::string& path);
absl::Status WriteStringToFile(const std::string& path,
                               std::string_view content);

// Field parsers that report `line` and `field` on failure.
absl::StatusOr<int64_t> ParseInt(const TextLine& line, size_t index,
                                 std::string_view field);
absl::StatusOr<double> ParseDouble(const TextLine& line, size_t index,
                                   std::string_view field);
absl::Status ExpectTokens(const TextLine& line, size_t count,
                          std::string_view what);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double value);

}  // namespace pipelink

#endif  // PIPELINK_COMMON_TEXT_FORMAT_H_
