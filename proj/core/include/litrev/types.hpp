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

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace litrev {

using Date = std::chrono::year_month_day;

/// Accepts "YYYY-MM-DD", "YYYY-MM" and "YYYY" (missing parts default to 01).
/// Throws Error(kInvalidArgument) on anything else.
Date ParseDate(std::string_view s);
std::optional<Date> TryParseDate(std::string_view s);
std::string FormatDate(Date d);

/// The abstract of the paper being written; sole retrieval input.
struct QueryAbstract {
  std::string text;
  std::optional<Date> publication_date;
  std::string source_id;
};

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::string abstract;
  Date publication_date{};
  std::map<std::string, std::string> external_ids;
  std::optional<std::vector<double>> embedding;
  std::optional<int> citation_count;
  /// Backend fields that did not map onto the record.
  nlohmann::json raw = nlohmann::json::object();
};

struct Provenance {
  int query_rank = 0;   // 1-based rank of the keyword query
  int result_rank = 0;  // 1-based rank within that query's results
  std::string backend;
};

/// Merged, duplicate-free candidate pool for one query abstract.
struct CandidateSet {
  QueryAbstract query;
  std::vector<PaperRecord> candidates;
  std::map<std::string, Provenance> provenance;

  const PaperRecord* Find(std::string_view paper_id) const;
};

enum class RankStrategy { kPermutation, kEmbedding, kDebate };

std::string_view ToString(RankStrategy s);
RankStrategy ParseRankStrategy(std::string_view s);

struct RankEvidence {
  double score = 0.0;
  std::vector<std::string> arguments_for;
  std::vector<std::string> arguments_against;
  std::vector<std::string> excerpts;
  bool verified = false;
  int attempts = 0;
  /// Machine-readable notes: "unverified", "no_embedding", "unparseable", ...
  std::vector<std::string> flags;
};

struct RankedList {
  std::string query_id;
  std::vector<std::string> ordering;  // best first
  std::map<std::string, RankEvidence> evidence;
  RankStrategy strategy = RankStrategy::kPermutation;
};

void to_json(nlohmann::json& j, const QueryAbstract& q);
void from_json(const nlohmann::json& j, QueryAbstract& q);
void to_json(nlohmann::json& j, const PaperRecord& p);
void from_json(const nlohmann::json& j, PaperRecord& p);
void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);
void to_json(nlohmann::json& j, const CandidateSet& c);
void from_json(const nlohmann::json& j, CandidateSet& c);
void to_json(nlohmann::json& j, const RankEvidence& e);
void from_json(const nlohmann::json& j, RankEvidence& e);
void to_json(nlohmann::json& j, const RankedList& r);
void from_json(const nlohmann::json& j, RankedList& r);

}  // namespace litrev
