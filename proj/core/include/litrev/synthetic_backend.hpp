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

namespace litrev::llm {

/// Offline stand-in for a chat model that understands the library's default
/// prompts: keyword queries from the abstract, lexical-overlap rankings,
/// debate verdicts quoting the candidate verbatim, and reviews that follow
/// the sentence plan exactly. Output is a pure function of the request.
/// Unrecognized prompts get an empty answer.
class SyntheticBackend : public ChatBackend {
 public:
  BackendReply Send(const CompletionRequest& req) override;
  std::string Name() const override { return "synthetic"; }

  /// Lowercased alphanumeric words of four or more letters that are not
  /// stopwords, first occurrences only.
  static std::vector<std::string> ContentWords(std::string_view text);
};

}  // namespace litrev::llm
