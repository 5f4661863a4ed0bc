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

#pragma once

#include <compare>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace litrev {

/// Delexicalized citation placeholder, rendered "@cite_{index}".
struct CitationKey {
  int index = 1;

  std::string ToString() const { return "@cite_" + std::to_string(index); }
  friend auto operator<=>(const CitationKey&, const CitationKey&) = default;
};

/// Every "@cite_<digits>" token ending on a word boundary, in text order,
/// repeats included. Shared by generation and the coverage metric.
std::vector<CitationKey> ExtractCitationKeys(std::string_view text);

std::set<CitationKey> DistinctKeys(const std::vector<CitationKey>& keys);

/// Keys 1..k.
std::set<CitationKey> DenseKeys(int k);

using SentenceSplitter = std::function<std::vector<std::string>(std::string_view)>;

/// Rule-based splitter: breaks after . ! ? (plus closing quotes/brackets)
/// when whitespace follows and the next word can open a sentence, except
/// after common abbreviations, single-letter initials and "et al.". Blank
/// lines always break. Returned sentences are whitespace-collapsed.
std::vector<std::string> SplitSentences(std::string_view text);

}  // namespace litrev
