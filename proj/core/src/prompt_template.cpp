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

#include "litrev/prompt_template.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "litrev/error.hpp"

namespace litrev {
namespace {

bool IsNameChar(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Walks the template, calling `on_text` for literal runs and `on_name` for
// each placeholder.
void Scan(const std::string& t, const std::function<void(std::string_view)>& on_text,
          const std::function<void(const std::string&)>& on_name) {
  std::size_t i = 0;
  while (i < t.size()) {
    char c = t[i];
    if ((c == '{' || c == '}') && i + 1 < t.size() && t[i + 1] == c) {
      on_text(std::string_view(&t[i], 1));
      i += 2;
      continue;
    }
    if (c == '{') {
      std::size_t j = i + 1;
      while (j < t.size() && IsNameChar(t[j])) ++j;
      if (j > i + 1 && j < t.size() && t[j] == '}') {
        on_name(t.substr(i + 1, j - i - 1));
        i = j + 1;
        continue;
      }
    }
    on_text(std::string_view(&t[i], 1));
    ++i;
  }
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

PromptTemplate PromptTemplate::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read prompt template " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return PromptTemplate(buf.str());
}

std::string PromptTemplate::Render(const std::map<std::string, std::string>& vars) const {
  std::string out;
  out.reserve(text_.size() * 2);
  Scan(
      text_, [&](std::string_view s) { out.append(s); },
      [&](const std::string& name) {
        auto it = vars.find(name);
        if (it == vars.end()) {
          throw Error(ErrorCode::kInvalidArgument, "template placeholder {" + name + "} has no value");
        }
        out += it->second;
      });
  return out;
}

std::set<std::string> PromptTemplate::Placeholders() const {
  std::set<std::string> names;
  Scan(text_, [](std::string_view) {}, [&](const std::string& n) { names.insert(n); });
  return names;
}

}  // namespace litrev
