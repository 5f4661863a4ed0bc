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

#include "litrev/query_generation.hpp"

#include <regex>
#include <set>

#include "litrev/error.hpp"
#include "litrev/text.hpp"

namespace litrev {
namespace {

const std::regex& MarkerPattern() {
  // "1." "1)" "(1)" "1:" "-" "*" "+" "#" and the UTF-8 bullet.
  static const std::regex kMarker(R"(^\s*(?:\(?\d+[.):]\s*|[-*+]\s+|#+\s*|\xE2\x80\xA2\s*))");
  return kMarker;
}

bool IsQuote(std::string_view s, std::size_t pos, std::size_t* len) {
  static constexpr std::string_view kMulti[] = {"\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98",
                                                "\xE2\x80\x99"};
  char c = s[pos];
  if (c == '"' || c == '\'' || c == '`') {
    *len = 1;
    return true;
  }
  for (auto q : kMulti) {
    if (s.substr(pos, q.size()) == q) {
      *len = q.size();
      return true;
    }
  }
  return false;
}

std::string CleanItem(std::string item) {
  // Markers can stack ("1. - foo"), so strip until stable.
  std::string prev;
  while (prev != item) {
    prev = item;
    item = std::regex_replace(item, MarkerPattern(), "", std::regex_constants::format_first_only);
    std::string_view v = text::Trim(item);
    while (v.size() >= 2 && v.substr(0, 2) == "**") v.remove_prefix(2);
    while (v.size() >= 2 && v.substr(v.size() - 2) == "**") v.remove_suffix(2);
    std::size_t qlen = 0;
    while (!v.empty() && IsQuote(v, 0, &qlen)) v.remove_prefix(qlen);
    while (!v.empty() && std::string_view(".,;:!?").find(v.back()) != std::string_view::npos) {
      v.remove_suffix(1);
    }
    bool stripped = true;
    while (stripped && !v.empty()) {
      stripped = false;
      for (std::size_t l : {1u, 3u}) {
        if (v.size() >= l && IsQuote(v, v.size() - l, &qlen) && qlen == l) {
          v.remove_suffix(l);
          stripped = true;
          break;
        }
      }
    }
    item = text::CollapseWhitespace(v);
  }
  return item;
}

}  // namespace

std::vector<KeywordQuery> ParseKeywordResponse(std::string_view raw, int n) {
  (void)n;
  std::vector<std::string> lines;
  for (auto& line : text::SplitLines(raw)) {
    auto t = text::Trim(line);
    if (t.empty() || t.back() == ':') continue;  // blank or preamble ("Queries:")
    lines.emplace_back(t);
  }

  std::vector<std::string> items;
  if (lines.size() == 1) {
    static const std::regex kSep(R"([,;])");
    const auto& l = lines.front();
    for (std::sregex_token_iterator it(l.begin(), l.end(), kSep, -1), end; it != end; ++it) {
      items.push_back(it->str());
    }
  } else {
    items = std::move(lines);
  }

  std::vector<KeywordQuery> out;
  std::set<std::string> seen;
  for (auto& item : items) {
    auto cleaned = CleanItem(std::move(item));
    if (cleaned.empty()) continue;
    if (!seen.insert(text::ToLower(cleaned)).second) continue;
    out.push_back(KeywordQuery{cleaned, static_cast<int>(out.size()) + 1});
  }
  return out;
}

std::string RenderNumberedList(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + items[i];
    if (i + 1 < items.size()) out += '\n';
  }
  return out;
}

std::string QueryGenerationOptions::DefaultKeywordPrompt() {
  return "You will be provided with the abstract of a scientific document. Summarize the research idea "
         "of the abstract into {n} short keyword search queries that can be used to find related prior "
         "work with an academic search engine. Each query should be a few keywords long and the queries "
         "should cover different aspects of the idea.\n"
         "Return the queries as a numbered list with one query per line and no other text.\n\n"
         "Abstract:\n{abstract}\n\nSearch queries:\n";
}

std::string QueryGenerationOptions::DefaultKeywordReprompt() {
  return "Your previous answer did not contain {n} distinct search queries. Answer again with exactly "
         "{n} lines in the form \"1. <query>\" and nothing else.\n\n"
         "Abstract:\n{abstract}\n\nSearch queries:\n";
}

std::vector<KeywordQuery> GenerateQueries(llm::Gateway& gateway, const QueryAbstract& abstract, int n,
                                          const QueryGenerationOptions& opts) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "query count must be >= 1");
  if (text::Trim(abstract.text).empty()) throw Error(ErrorCode::kInvalidArgument, "query abstract is empty");

  const std::map<std::string, std::string> vars{{"abstract", abstract.text}, {"n", std::to_string(n)}};
  llm::CompletionRequest req;
  req.system_text = opts.system_text;
  req.max_output_tokens = opts.max_output_tokens;
  req.temperature = opts.temperature;

  std::vector<KeywordQuery> parsed;
  for (const PromptTemplate* tpl : {&opts.prompt, &opts.reprompt}) {
    req.user_text = tpl->Render(vars);
    parsed = ParseKeywordResponse(gateway.Complete(req).text, n);
    if (static_cast<int>(parsed.size()) >= n) {
      parsed.resize(static_cast<std::size_t>(n));
      return parsed;
    }
  }
  throw Error(ErrorCode::kUnparseableResponse, "keyword response yielded " + std::to_string(parsed.size()) +
                                                   " distinct queries, needed " + std::to_string(n));
}

}  // namespace litrev
