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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "litrev/citation.hpp"
#include "litrev/generation.hpp"

namespace litrev::eval {

struct RetrievalJudgment {
  std::string query_id;
  std::vector<std::string> retrieved;  // best first, duplicate-free
  std::set<std::string> ground_truth;

  /// Throws InvalidArgument on a duplicate in `retrieved`.
  void Validate() const;
};

/// |top-k ∩ GT| / k. A short list uses its whole length; the divisor stays k.
double PrecisionAtK(const RetrievalJudgment& j, int k);

/// |top-k ∩ GT| / |retrieved ∩ GT|; empty when nothing relevant was
/// retrieved.
std::optional<double> NormalizedRecallAtK(const RetrievalJudgment& j, int k);

/// |top-k ∩ GT| / |GT|; empty when GT is empty.
std::optional<double> ClassicRecallAtK(const RetrievalJudgment& j, int k);

struct Coverage {
  bool covered = false;
  std::set<CitationKey> found;  // every distinct key cited in the text
  std::set<CitationKey> missing;
  std::set<CitationKey> spurious;
};

/// covered iff the distinct keys cited in `text` equal `gt_keys`.
Coverage ComputeCoverage(std::string_view text, const std::set<CitationKey>& gt_keys);

struct AdherenceRecord {
  int planned_lines = 0;
  int generated_lines = 0;
  int diff = 0;  // generated - planned; negative means too few sentences

  bool exact() const { return diff == 0; }
};

AdherenceRecord PlanAdherence(const gen::GeneratedReview& review, const gen::SentencePlan& plan);

struct AdherenceSummary {
  int count = 0;
  double mean_diff = 0.0;
  int max_abs_diff = 0;
  double exact_rate = 0.0;
};

AdherenceSummary SummarizeAdherence(const std::vector<AdherenceRecord>& records);

enum class RougeVariant { k1, k2, kL };

std::string_view ToString(RougeVariant v);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool empty_text = false;
};

/// Lowercased runs of ASCII letters and digits; everything else separates.
std::vector<std::string> RougeTokenize(std::string_view text);

/// Clipped n-gram overlap for 1 and 2, longest common subsequence for L.
/// An empty side gives zeros with `empty_text` set.
RougeScore Rouge(std::string_view reference, std::string_view hypothesis, RougeVariant variant);

std::vector<int> DefaultKGrid();

struct ReviewInput {
  std::string query_id;
  gen::GeneratedReview review;
  std::set<CitationKey> gt_keys;
  std::optional<gen::SentencePlan> plan;
  std::optional<std::string> reference_text;
};

struct MetricAggregate {
  int count = 0;
  int excluded = 0;  // queries in the metric's domain without a value
  std::optional<double> mean;
  std::optional<double> stddev;  // population
};

struct MetricReport {
  static constexpr const char* kSchema = "litrev.report/1";

  std::vector<int> k_grid;
  /// query_id -> metric name ("precision@10", "rouge1_f1", ...) -> value.
  std::map<std::string, std::map<std::string, double>> per_query;
  std::map<std::string, MetricAggregate> aggregates;

  nlohmann::json ToJson() const;
  static MetricReport FromJson(const nlohmann::json& j);
  /// Header "query_id,metric,k,value"; one row per query and metric.
  std::string ToCsv() const;
  /// Mean precision and normalized recall against k.
  nlohmann::json PlotData() const;
  /// Writes precision.tsv and normalized_recall.tsv (k, mean, stddev).
  void WritePlotFiles(const std::filesystem::path& dir) const;

  /// Recomputes aggregates from per_query; throws InvalidArgument on drift.
  void CheckAggregates() const;
};

/// Throws AlignmentError when `judgments` is empty, a query id repeats or a
/// review has no matching judgment.
MetricReport BuildReport(const std::vector<RetrievalJudgment>& judgments, const std::vector<ReviewInput>& reviews = {},
                         std::vector<int> k_grid = DefaultKGrid());

}  // namespace litrev::eval
