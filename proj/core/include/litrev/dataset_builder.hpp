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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "litrev/types.hpp"

namespace litrev::dataset {

struct SectionSpan {
  std::string title;
  std::size_t start = 0;
  std::size_t end = 0;
};

/// One line of the ingest NDJSON:
/// {id, external_ids{arxiv}, title, abstract, body, publication_date,
///  sections[{title, start, end}], citations[corpus id]}.
struct RawPaper {
  std::string id;
  std::map<std::string, std::string> external_ids;
  std::string title;
  std::string abstract;
  std::string body;
  std::optional<Date> publication_date;
  std::vector<SectionSpan> sections;
  std::vector<std::string> citations;

  /// Throws IngestError on missing or mistyped fields.
  static RawPaper FromJson(const nlohmann::json& j);
  std::string ArxivId() const;
};

/// Lowercase, trim, drop leading numbering ("2.", "2.1", "IV.", "A)") and
/// trailing punctuation.
std::string NormalizeSectionTitle(std::string_view title);

/// Exact match after normalization against {related work, related works,
/// literature review, background}.
bool IsRelatedWorkTitle(std::string_view title);

/// First matching section, or none.
std::optional<SectionSpan> FindRelatedWorkSpan(std::string_view doc, const std::vector<SectionSpan>& sections);

/// Anchored prefix test on the arXiv id; `month_tag` must be four digits.
bool MatchesMonth(const RawPaper& paper, std::string_view month_tag);
std::vector<RawPaper> FilterMonth(const std::vector<RawPaper>& papers, std::string_view month_tag);

struct EvalExample {
  QueryAbstract query;
  std::string title;
  std::string gt_related_work;
  std::vector<PaperRecord> gt_citations;  // ascending paper_id
  std::optional<std::string> context;
  SectionSpan span;
};

void to_json(nlohmann::json& j, const EvalExample& e);
void from_json(const nlohmann::json& j, EvalExample& e);

enum class DropReason {
  kMalformedRecord,
  kMonthMismatch,
  kDuplicateId,
  kMissingAbstract,
  kNoRelatedWork,
  kEmptyRelatedWork,
  kEmptyContext,
  kNoCitations,
  kUnresolvedCitation,
  kCitationAfterQuery,
  kInfeasiblePool,
};

std::string_view ToString(DropReason r);

struct DroppedRecord {
  std::string paper_id;  // empty when the record did not parse
  std::size_t line = 0;  // 1-based input line
  DropReason reason = DropReason::kMalformedRecord;
  std::string detail;
};

/// Cited-paper lookup by corpus id. NDJSON lines carry paper_id (or
/// corpusid / id), title, abstract and an optional publication_date.
class CitationCorpus {
 public:
  static CitationCorpus Load(const std::filesystem::path& path);
  void Add(PaperRecord record);
  const PaperRecord* Find(const std::string& id) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::string, PaperRecord> records_;
};

/// Returns how many candidates retrieval can gather for the query.
using FeasibilityProbe = std::function<std::size_t(const QueryAbstract&)>;

struct BuildOptions {
  std::string month_tag;
  std::size_t pool_target = 100;
  FeasibilityProbe probe;  // unset: every pool counts as feasible
  std::optional<std::size_t> sample;
  std::uint64_t seed = 0;
};

struct BuildResult {
  std::vector<EvalExample> examples;  // ascending query id
  std::vector<DroppedRecord> drops;   // input order
  std::size_t input_count = 0;
  std::size_t sampled_out = 0;

  std::map<std::string, std::size_t> DropCounts() const;
};

/// `lines` are raw NDJSON lines; blank lines are skipped and not counted.
/// input_count == examples + drops + sampled_out.
BuildResult BuildEvalSet(const std::vector<std::string>& lines, const CitationCorpus& corpus,
                         const BuildOptions& opts);
BuildResult BuildEvalSetFromFile(const std::filesystem::path& path, const CitationCorpus& corpus,
                                 const BuildOptions& opts);

struct DatasetStats {
  std::size_t examples = 0;
  std::size_t total_citations = 0;
  double mean_related_work_words = 0.0;
  double mean_abstract_words = 0.0;
  double mean_citations = 0.0;
  std::map<std::string, std::size_t> drops;
  std::size_t input_count = 0;

  nlohmann::json ToJson() const;
  /// Two-space indented JSON plus trailing newline; byte-stable.
  std::string Serialize() const;
};

/// Throws EmptyInput on an empty example list.
DatasetStats ComputeStats(const std::vector<EvalExample>& examples);
DatasetStats ComputeStats(const BuildResult& result);

void WriteExamples(const std::filesystem::path& path, const std::vector<EvalExample>& examples);
std::vector<EvalExample> ReadExamples(const std::filesystem::path& path);

}  // namespace litrev::dataset
