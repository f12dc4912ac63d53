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

#include "pipelink/common/text_format.h"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace pipelink {

std::vector<TextLine> TokenizeLines(std::string_view content) {
  std::vector<TextLine> lines;
  int number = 0;
  size_t pos = 0;
  while (pos <= content.size()) {
    size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view raw = content.substr(pos, end - pos);
    ++number;
    pos = end + 1;
    if (const size_t hash = raw.find('#'); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    TextLine line;
    line.number = number;
    size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i])))
        ++i;
      size_t j = i;
      while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j])))
        ++j;
      if (j > i) line.tokens.emplace_back(raw.substr(i, j - i));
      i = j;
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (end == content.size()) break;
  }
  return lines;
}

absl::StatusOr<std::string> ReadFileToString(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::Status WriteStringToFile(const std::string& path,
                               std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot open ", path, " for writing"));
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) return absl::DataLossError(absl::StrCat("short write to ", path));
  return absl::OkStatus();
}

absl::StatusOr<int64_t> ParseInt(const TextLine& line, size_t index,
                                 std::string_view field) {
  if (index >= line.tokens.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", line.number, ": missing field '", std::string(field), "'"));
  }
  const std::string& tok = line.tokens[index];
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("line ", line.number, ": field '", std::string(field),
                     "' is not an integer: '", tok, "'"));
  }
  return value;
}

absl::StatusOr<double> ParseDouble(const TextLine& line, size_t index,
                                   std::string_view field) {
  if (index >= line.tokens.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", line.number, ": missing field '", std::string(field), "'"));
  }
  const std::string& tok = line.tokens[index];
  double value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("line ", line.number, ": field '", std::string(field),
                     "' is not a number: '", tok, "'"));
  }
  return value;
}

absl::Status ExpectTokens(const TextLine& line, size_t count,
                          std::string_view what) {
  if (line.tokens.size() != count) {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", line.number, ": '", std::string(what), "' expects ", count - 1,
        " fields, got ", line.tokens.size() - 1));
  }
  return absl::OkStatus();
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace pipelink
