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

#include "litrev/synthetic_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "litrev/citation.hpp"
#include "litrev/generation.hpp"
#include "litrev/text.hpp"

namespace litrev::llm {

namespace {

std::string Between(const std::string& s, std::string_view open, std::string_view close) {
  const auto a = s.find(open);
  if (a == std::string::npos) return {};
  const auto start = a + open.size();
  const auto b = s.find(close, start);
  return s.substr(start, b == std::string::npos ? std::string::npos : b - start);
}

bool Contains(const std::string& s, std::string_view needle) { return s.find(needle) != std::string::npos; }

int FirstInt(const std::string& s, const std::regex& re, int fallback) {
  std::smatch m;
  if (std::regex_search(s, m, re)) return std::stoi(m[1].str());
  return fallback;
}

std::size_t Overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::unordered_set<std::string> bs(b.begin(), b.end());
  std::size_t n = 0;
  for (const auto& w : a) n += bs.count(w);
  return n;
}

std::map<CitationKey, std::string> ParseReferenceBlock(const std::string& s) {
  static const std::regex kRef(R"re((@cite_\d+): """(.*?)""")re");
  std::map<CitationKey, std::string> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kRef); it != std::sregex_iterator(); ++it) {
    const auto keys = ExtractCitationKeys((*it)[1].str());
    if (!keys.empty()) out[keys.front()] = (*it)[2].str();
  }
  return out;
}

std::string JoinKeys(const std::set<CitationKey>& keys) {
  std::vector<std::string> names;
  for (const auto& k : keys) names.push_back(k.ToString());
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += (i + 1 == names.size()) ? " and " : ", ";
    out += names[i];
  }
  return out;
}

std::string MakeSentence(const std::set<CitationKey>& keys, const std::map<CitationKey, std::string>& refs) {
  if (keys.empty()) return "This line of research motivates the approach studied in the present paper.";
  std::vector<std::string> topics;
  for (const auto& k : keys) {
    auto it = refs.find(k);
    if (it == refs.end()) continue;
    for (const auto& w : SyntheticBackend::ContentWords(it->second)) {
      if (topics.size() == 3) break;
      if (std::find(topics.begin(), topics.end(), w) == topics.end()) topics.push_back(w);
    }
  }
  for (const char* filler : {"retrieval", "ranking", "generation"}) {
    if (topics.size() < 3 && std::find(topics.begin(), topics.end(), filler) == topics.end()) {
      topics.push_back(filler);
    }
  }
  return "Work by " + JoinKeys(keys) + " investigates " + topics[0] + ", " + topics[1] + " and " + topics[2] + ".";
}

std::string WriteToPlan(const gen::SentencePlan& plan, const std::map<CitationKey, std::string>& refs) {
  std::vector<std::string> sentences;
  for (int line = 1; line <= plan.num_sentences; ++line) {
    auto it = plan.assignments.find(line);
    sentences.push_back(MakeSentence(it == plan.assignments.end() ? std::set<CitationKey>{} : it->second, refs));
  }
  return text::Join(sentences, " ");
}

// One sentence per reference, in key order.
gen::SentencePlan OneLinePerKey(const std::map<CitationKey, std::string>& refs) {
  gen::SentencePlan plan;
  plan.num_sentences = std::max<int>(1, static_cast<int>(refs.size()));
  int line = 1;
  for (const auto& [k, _] : refs) plan.assignments[line++].insert(k);
  return plan;
}

std::string Keywords(const std::string& prompt) {
  static const std::regex kN(R"((?:into|exactly) (\d+) )");
  const int n = std::max(1, FirstInt(prompt, kN, 3));
  const auto words = SyntheticBackend::ContentWords(Between(prompt, "Abstract:\n", "\n\nSearch queries:"));
  if (words.empty()) return "";
  std::string out;
  for (int i = 0; i < n; ++i) {
    const auto w = static_cast<std::size_t>(i);
    std::string q = words[w % words.size()];
    if (words.size() > 1) q += " " + words[(w + 1) % words.size()];
    if (w + 1 >= words.size()) q += " " + std::to_string(i + 1);
    out += std::to_string(i + 1) + ". " + q + "\n";
  }
  return out;
}

std::string Permutation(const std::string& prompt) {
  static const std::regex kCand(R"(\[(\d+)\] Title: ([^\n]*)\nAbstract: ([^\n]*))");
  const auto query = SyntheticBackend::ContentWords(Between(prompt, "Query abstract:\n", "\n\n"));
  std::vector<std::pair<std::size_t, int>> scored;  // overlap, identifier
  for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), kCand); it != std::sregex_iterator(); ++it) {
    const auto words = SyntheticBackend::ContentWords((*it)[2].str() + " " + (*it)[3].str());
    scored.emplace_back(Overlap(words, query), std::stoi((*it)[1].str()));
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> parts;
  for (const auto& [_, id] : scored) parts.push_back("[" + std::to_string(id) + "]");
  return text::Join(parts, " > ");
}

std::string Debate(const std::string& prompt) {
  const auto query = Between(prompt, "Query abstract:\n", "\n\nCandidate title:");
  const auto candidate = Between(prompt, "Candidate abstract:\n", "\n\n");
  const auto cand_words = SyntheticBackend::ContentWords(candidate);
  const auto shared = Overlap(cand_words, SyntheticBackend::ContentWords(query));
  double p = cand_words.empty() ? 0.0 : static_cast<double>(shared) / static_cast<double>(cand_words.size());
  p = std::round(p * 1000.0) / 1000.0;
  const auto sentences = SplitSentences(candidate);
  nlohmann::json verdict = {
      {"arguments_for", {"The candidate shares " + std::to_string(shared) + " key terms with the query abstract."}},
      {"arguments_against",
       {"The candidate covers " + std::to_string(cand_words.size() - shared) + " terms the query does not use."}},
      {"excerpts", sentences.empty() ? nlohmann::json::array() : nlohmann::json::array({sentences.front()})},
      {"probability", p}};
  return "Assessment of the candidate paper.\n```verdict\n" + verdict.dump() + "\n```\n";
}

std::string Generation(const std::string& prompt) {
  if (Contains(prompt, "one sentence at a time")) {
    static const std::regex kLine(R"(Write only sentence (\d+)\.)");
    const int line = FirstInt(prompt, kLine, 1);
    const auto instruction = Between(prompt, "Write only sentence " + std::to_string(line) + ".", "\n");
    const auto keys = DistinctKeys(ExtractCitationKeys(instruction));
    return MakeSentence(keys, ParseReferenceBlock(prompt));
  }
  if (Contains(prompt, "Rewrite it as one cohesive related work section")) {
    return Between(prompt, "Draft:\n", "\n\nRelated work:");
  }
  if (Contains(prompt, "Write one or two sentences that describe the reference paper")) {
    const auto keys = DistinctKeys(ExtractCitationKeys(Between(prompt, "Cite it with its key ", "\n")));
    return MakeSentence(keys, ParseReferenceBlock(prompt));
  }
  const auto refs = ParseReferenceBlock(prompt);
  if (Contains(prompt, "First write a sentence plan")) {
    auto plan = OneLinePerKey(refs);
    const auto body = WriteToPlan(plan, refs);
    plan.num_words = std::max(10, static_cast<int>(text::WordCount(body) + 5) / 10 * 10);
    return gen::RenderPlan(plan) + "\nRelated work:\n" + body;
  }
  if (Contains(prompt, "Sentence plan: ")) {
    try {
      return WriteToPlan(gen::ParsePlan(Between(prompt, "Sentence plan: ", "\n")), refs);
    } catch (const std::exception&) {
      return "";
    }
  }
  if (Contains(prompt, "Reference papers:")) return WriteToPlan(OneLinePerKey(refs), refs);
  return "";
}

}  // namespace

std::vector<std::string> SyntheticBackend::ContentWords(std::string_view s) {
  static const std::unordered_set<std::string> kStop = {
      "about",  "above",   "after",   "again",  "also",    "among",  "approach", "based",   "been",   "being",
      "between", "both",   "could",   "does",   "each",    "from",   "further",  "have",    "here",   "however",
      "into",   "just",    "many",    "more",   "most",    "much",   "only",     "other",   "over",   "paper",
      "propose", "proposed", "results", "same",  "show",    "shows",  "some",     "such",    "than",   "that",
      "their",  "them",    "then",    "there",  "these",   "they",   "this",     "those",   "through", "under",
      "using",  "very",    "well",    "were",   "what",    "when",   "where",    "which",   "while",  "will",
      "with",   "within",  "work",    "works",  "would",   "your",   "approx",   "figs",    "prof",   "refs",
      "resp",   "ltd"};
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 4 && !kStop.count(cur) && seen.insert(cur).second) out.push_back(cur);
    cur.clear();
  };
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

BackendReply SyntheticBackend::Send(const CompletionRequest& req) {
  const auto& p = req.user_text;
  BackendReply r;
  if (Contains(p, "short keyword search queries") || Contains(p, "distinct search queries")) {
    r.text = Keywords(p);
  } else if (Contains(p, "candidate papers, each indicated by a numerical identifier")) {
    r.text = Permutation(p);
  } else if (Contains(p, "Candidate abstract:\n")) {
    r.text = Debate(p);
  } else {
    r.text = Generation(p);
  }
  return r;
}

}  // namespace litrev::llm
