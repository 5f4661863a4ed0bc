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

#include <string>
#include <string_view>
#include <vector>

#include "litrev/llm_gateway.hpp"
#include "litrev/prompt_template.hpp"
#include "litrev/types.hpp"

namespace litrev {

struct KeywordQuery {
  std::string terms;
  int rank = 1;  // 1 = first query

  friend bool operator==(const KeywordQuery&, const KeywordQuery&) = default;
};

/// Tolerant parser for LLM keyword lists. Accepts numbered lists, bulleted
/// lists and a single comma-separated line. Strips enumeration markers,
/// quotes and trailing punctuation, then drops case-insensitive duplicates
/// keeping the first occurrence. The result may hold more or fewer than `n`
/// entries; callers enforce the count.
std::vector<KeywordQuery> ParseKeywordResponse(std::string_view raw, int n);

/// "1. a\n2. b\n...", the shape the prompt asks for.
std::string RenderNumberedList(const std::vector<std::string>& items);

struct QueryGenerationOptions {
  PromptTemplate prompt{DefaultKeywordPrompt()};
  PromptTemplate reprompt{DefaultKeywordReprompt()};
  std::string system_text = "You are a helpful research assistant who is helping with a literature review.";
  int max_output_tokens = 256;
  double temperature = 0.0;

  static std::string DefaultKeywordPrompt();
  static std::string DefaultKeywordReprompt();
};

/// One completion, one re-prompt on a short answer, then UnparseableResponse.
/// Returns exactly `n` queries ranked 1..n.
std::vector<KeywordQuery> GenerateQueries(llm::Gateway& gateway, const QueryAbstract& abstract, int n,
                                          const QueryGenerationOptions& opts = {});

}  // namespace litrev
