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

#include "litrev/types.hpp"

#include <cstdio>
#include <regex>

#include "litrev/error.hpp"

namespace litrev {

using nlohmann::json;

std::optional<Date> TryParseDate(std::string_view s) {
  static const std::regex kDate(R"(^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$)");
  std::cmatch m;
  if (!std::regex_match(s.begin(), s.end(), m, kDate)) return std::nullopt;
  int y = std::stoi(m[1].str());
  unsigned mo = m[2].matched ? static_cast<unsigned>(std::stoi(m[2].str())) : 1;
  unsigned d = m[3].matched ? static_cast<unsigned>(std::stoi(m[3].str())) : 1;
  Date date{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

Date ParseDate(std::string_view s) {
  auto d = TryParseDate(s);
  if (!d) throw Error(ErrorCode::kInvalidArgument, "malformed date '" + std::string(s) + "'");
  return *d;
}

std::string FormatDate(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

const PaperRecord* CandidateSet::Find(std::string_view paper_id) const {
  for (const auto& c : candidates) {
    if (c.paper_id == paper_id) return &c;
  }
  return nullptr;
}

std::string_view ToString(RankStrategy s) {
  switch (s) {
    case RankStrategy::kPermutation: return "permutation";
    case RankStrategy::kEmbedding: return "embedding";
    case RankStrategy::kDebate: return "debate";
  }
  return "permutation";
}

RankStrategy ParseRankStrategy(std::string_view s) {
  if (s == "permutation") return RankStrategy::kPermutation;
  if (s == "embedding") return RankStrategy::kEmbedding;
  if (s == "debate") return RankStrategy::kDebate;
  throw Error(ErrorCode::kInvalidArgument, "unknown rerank strategy '" + std::string(s) + "'");
}

void to_json(json& j, const QueryAbstract& q) {
  j = json{{"text", q.text}, {"source_id", q.source_id}};
  j["publication_date"] = q.publication_date ? json(FormatDate(*q.publication_date)) : json(nullptr);
}

void from_json(const json& j, QueryAbstract& q) {
  q.text = j.at("text").get<std::string>();
  q.source_id = j.value("source_id", "");
  q.publication_date.reset();
  if (j.contains("publication_date") && j["publication_date"].is_string()) {
    q.publication_date = ParseDate(j["publication_date"].get<std::string>());
  }
}

void to_json(json& j, const PaperRecord& p) {
  j = json{{"paper_id", p.paper_id},
           {"title", p.title},
           {"abstract", p.abstract},
           {"publication_date", FormatDate(p.publication_date)},
           {"external_ids", p.external_ids}};
  if (p.embedding) j["embedding"] = *p.embedding;
  if (p.citation_count) j["citation_count"] = *p.citation_count;
  if (!p.raw.empty()) j["raw"] = p.raw;
}

void from_json(const json& j, PaperRecord& p) {
  p.paper_id = j.at("paper_id").get<std::string>();
  p.title = j.value("title", "");
  p.abstract = j.value("abstract", "");
  p.publication_date = ParseDate(j.at("publication_date").get<std::string>());
  p.external_ids = j.value("external_ids", std::map<std::string, std::string>{});
  p.embedding.reset();
  if (j.contains("embedding") && j["embedding"].is_array()) {
    p.embedding = j["embedding"].get<std::vector<double>>();
  }
  p.citation_count.reset();
  if (j.contains("citation_count") && j["citation_count"].is_number_integer()) {
    p.citation_count = j["citation_count"].get<int>();
  }
  p.raw = j.value("raw", json::object());
}

void to_json(json& j, const Provenance& p) {
  j = json{{"query_rank", p.query_rank}, {"result_rank", p.result_rank}, {"backend", p.backend}};
}

void from_json(const json& j, Provenance& p) {
  p.query_rank = j.at("query_rank").get<int>();
  p.result_rank = j.at("result_rank").get<int>();
  p.backend = j.value("backend", "");
}

void to_json(json& j, const CandidateSet& c) {
  j = json{{"query", c.query}, {"candidates", c.candidates}, {"provenance", c.provenance}};
}

void from_json(const json& j, CandidateSet& c) {
  c.query = j.at("query").get<QueryAbstract>();
  c.candidates = j.at("candidates").get<std::vector<PaperRecord>>();
  c.provenance = j.value("provenance", std::map<std::string, Provenance>{});
}

void to_json(json& j, const RankEvidence& e) {
  j = json{{"score", e.score},
           {"arguments_for", e.arguments_for},
           {"arguments_against", e.arguments_against},
           {"excerpts", e.excerpts},
           {"verified", e.verified},
           {"attempts", e.attempts},
           {"flags", e.flags}};
}

void from_json(const json& j, RankEvidence& e) {
  e.score = j.at("score").get<double>();
  e.arguments_for = j.value("arguments_for", std::vector<std::string>{});
  e.arguments_against = j.value("arguments_against", std::vector<std::string>{});
  e.excerpts = j.value("excerpts", std::vector<std::string>{});
  e.verified = j.value("verified", false);
  e.attempts = j.value("attempts", 0);
  e.flags = j.value("flags", std::vector<std::string>{});
}

void to_json(json& j, const RankedList& r) {
  j = json{{"query_id", r.query_id},
           {"ordering", r.ordering},
           {"evidence", r.evidence},
           {"strategy", std::string(ToString(r.strategy))}};
}

void from_json(const json& j, RankedList& r) {
  r.query_id = j.value("query_id", "");
  r.ordering = j.at("ordering").get<std::vector<std::string>>();
  r.evidence = j.value("evidence", std::map<std::string, RankEvidence>{});
  r.strategy = ParseRankStrategy(j.at("strategy").get<std::string>());
}

}  // namespace litrev
