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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace litrev::text {

std::string_view Trim(std::string_view s);
std::string ToLower(std::string_view s);

/// Collapses every run of ASCII whitespace to one space and trims the ends.
std::string CollapseWhitespace(std::string_view s);

std::vector<std::string> SplitLines(std::string_view s);
std::vector<std::string> SplitWhitespace(std::string_view s);

/// Whitespace-delimited word count.
std::size_t WordCount(std::string_view s);

/// Approximate token count used for budgets: round(words * 4 / 3).
std::int64_t ApproxTokens(std::string_view s);

std::string Join(const std::vector<std::string>& parts, std::string_view sep);

bool StartsWith(std::string_view s, std::string_view prefix);

/// Lowercase hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);

}  // namespace litrev::text
