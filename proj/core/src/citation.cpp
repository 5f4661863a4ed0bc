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

#include "litrev/citation.hpp"

#include <cctype>
#include <regex>
#include <unordered_set>

#include "litrev/text.hpp"

namespace litrev {

std::vector<CitationKey> ExtractCitationKeys(std::string_view text_in) {
  static const std::regex kKey(R"(@cite_(\d+)\b)");
  std::vector<CitationKey> out;
  std::string s(text_in);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kKey); it != std::sregex_iterator(); ++it) {
    const auto digits = (*it)[1].str();
    // Absurdly long indices saturate rather than throw.
    int idx = digits.size() > 9 ? 999999999 : std::stoi(digits);
    out.push_back(CitationKey{idx});
  }
  return out;
}

std::set<CitationKey> DistinctKeys(const std::vector<CitationKey>& keys) {
  return std::set<CitationKey>(keys.begin(), keys.end());
}

std::set<CitationKey> DenseKeys(int k) {
  std::set<CitationKey> out;
  for (int i = 1; i <= k; ++i) out.insert(CitationKey{i});
  return out;
}

namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool IsCloser(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool CanOpenSentence(std::string_view rest) {
  if (rest.empty()) return false;
  unsigned char c = static_cast<unsigned char>(rest.front());
  if (std::isupper(c) || std::isdigit(c)) return true;
  if (c == '@' || c == '(' || c == '[' || c == '"' || c == '\'') return true;
  // UTF-8 opening quote.
  return rest.substr(0, 3) == "\xE2\x80\x9C";
}

bool IsAbbreviation(std::string_view word) {
  static const std::unordered_set<std::string> kAbbrev = {
      "e.g", "i.e", "al", "fig", "figs", "eq", "eqs", "vs", "cf", "dr", "mr", "mrs", "ms", "prof", "sec",
      "no", "vol", "pp", "approx", "resp", "ref", "refs", "ch", "st", "jr", "inc", "ltd", "nos", "viz", "ca"};
  while (!word.empty() && (word.front() == '(' || word.front() == '[' || word.front() == '"')) word.remove_prefix(1);
  if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word.front()))) return true;  // initial
  return kAbbrev.count(text::ToLower(word)) > 0;
}

}  // namespace

std::vector<std::string> SplitSentences(std::string_view s) {
  std::vector<std::string> out;
  auto emit = [&](std::string_view piece) {
    auto collapsed = text::CollapseWhitespace(piece);
    if (!collapsed.empty()) out.push_back(std::move(collapsed));
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    // Paragraph break.
    if (s[i] == '\n') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
      if (j < s.size() && s[j] == '\n') {
        emit(s.substr(start, i - start));
        start = j + 1;
        i = j + 1;
        continue;
      }
    }
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < s.size() && (s[end] == '.' || s[end] == '!' || s[end] == '?')) ++end;
    while (end < s.size() && IsCloser(s[end])) ++end;
    if (end < s.size() && !IsSpace(s[end])) {
      i = end;
      continue;
    }
    std::size_t next = end;
    while (next < s.size() && IsSpace(s[next])) ++next;
    if (next < s.size() && !CanOpenSentence(s.substr(next))) {
      i = end;
      continue;
    }
    if (c == '.') {
      std::size_t w = i;
      while (w > start && !IsSpace(s[w - 1])) --w;
      if (IsAbbreviation(s.substr(w, i - w))) {
        i = end;
        continue;
      }
    }
    emit(s.substr(start, end - start));
    start = end;
    i = end;
  }
  emit(s.substr(start));
  return out;
}

}  // namespace litrev
