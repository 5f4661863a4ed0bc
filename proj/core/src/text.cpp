// Copyright 2026 The litrev Authors.
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

#include "litrev/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>

#include "litrev/error.hpp"

namespace litrev {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kMockMiss: return "MockMiss";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kUnparseableResponse: return "UnparseableResponse";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kPoolUnderflow: return "PoolUnderflow";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kCorruptDump: return "CorruptDump";
    case ErrorCode::kNoQueryVector: return "NoQueryVector";
    case ErrorCode::kUnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::kMalformedPlan: return "MalformedPlan";
    case ErrorCode::kPlanMissing: return "PlanMissing";
    case ErrorCode::kUnknownKeyInText: return "UnknownKeyInText";
    case ErrorCode::kNoCitationsFound: return "NoCitationsFound";
    case ErrorCode::kUndefinedMetric: return "UndefinedMetric";
    case ErrorCode::kAlignmentError: return "AlignmentError";
    case ErrorCode::kIngestError: return "IngestError";
  }
  return "Unknown";
}

namespace text {
namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

std::string ToLower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string CollapseWhitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> SplitLines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) nl = s.size();
    auto line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string> SplitWhitespace(std::string_view s) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && IsSpace(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !IsSpace(s[j])) ++j;
    if (j > i) words.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return words;
}

std::size_t WordCount(std::string_view s) { return SplitWhitespace(s).size(); }

std::int64_t ApproxTokens(std::string_view s) {
  const auto words = static_cast<std::int64_t>(WordCount(s));
  return (words * 4 + 1) / 3;
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string Sha256Hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace text
}  // namespace litrev
