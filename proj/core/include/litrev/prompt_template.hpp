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

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace litrev {

/// Plain-text prompt template with `{name}` placeholders (name is
/// `[a-z_]+`). `{{` and `}}` emit literal braces; any other brace is copied
/// through, so JSON examples inside a template need no escaping.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text);

  static PromptTemplate FromFile(const std::filesystem::path& path);

  /// Throws Error(kInvalidArgument) when a placeholder has no value.
  std::string Render(const std::map<std::string, std::string>& vars) const;

  std::set<std::string> Placeholders() const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

}  // namespace litrev
