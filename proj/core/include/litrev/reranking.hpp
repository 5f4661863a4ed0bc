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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "litrev/llm_gateway.hpp"
#include "litrev/prompt_template.hpp"
#include "litrev/types.hpp"

namespace litrev::rerank {

// ---------------------------------------------------------------------------
// Listwise permutation ranking

enum class PermutationOutcome { kComplete, kIncomplete, kRepeated, kGarbage };

std::string_view ToString(PermutationOutcome o);

struct PermutationParse {
  std::string raw;
  std::vector<std::int64_t> indices;  // as parsed, 1-based
  PermutationOutcome outcome = PermutationOutcome::kGarbage;
};

/// Total over arbitrary text. Bracketed integers ("[3] > [1]") are read
/// first; with no brackets, bare integers are used. Defect precedence:
/// repeated > garbage (out-of-range value, non-numeric bracket or nothing
/// parseable) > incomplete.
PermutationParse ClassifyPermutation(std::string_view raw, int n);

/// Drops repeats after the first occurrence and out-of-range values, then
/// appends missing positions in pool order. Always a permutation of 1..n.
std::vector<int> RepairPermutation(const PermutationParse& parse, int n);

struct PermutationConfig {
  PromptTemplate prompt{DefaultPrompt()};
  std::string system_text =
      "You are an intelligent assistant that ranks candidate papers by their relevance to the abstract of a "
      "paper being written.";
  /// Whole-pool prompts above this estimate switch to sliding windows.
  std::int64_t max_prompt_tokens = 12000;
  int window_size = 20;
  int stride = 10;
  int max_output_tokens = 1024;

  static std::string DefaultPrompt();
};

struct PermutationResult {
  RankedList ranked;
  /// One entry per completion, in execution order (back window first).
  std::vector<PermutationParse> parses;
  /// Most severe outcome across all parses.
  PermutationOutcome WorstOutcome() const;
};

/// Renders the candidate block "[i] Title: ...\nAbstract: ..." for a slice.
std::string RenderCandidateBlock(const std::vector<const PaperRecord*>& papers);

/// Evidence score is (N - rank + 1) / N. Gateway errors propagate; malformed
/// model output never does.
PermutationResult RerankPermutation(llm::Gateway& gateway, const CandidateSet& pool, const QueryAbstract& query,
                                    const PermutationConfig& cfg = {});

// ---------------------------------------------------------------------------
// Debate ranking with attribution

enum class UnverifiedPolicy { kDemoteToTail, kKeepWithFlag };

std::string_view ToString(UnverifiedPolicy p);
UnverifiedPolicy ParseUnverifiedPolicy(std::string_view s);

struct DebateConfig {
  int max_attribution_retries = 2;  // <= 5
  UnverifiedPolicy unverified_policy = UnverifiedPolicy::kDemoteToTail;
  /// Off reproduces the no-verification ablation: excerpts are kept as
  /// emitted and never re-prompted for.
  bool verify_attribution = true;
  int parallelism = 1;
  int max_output_tokens = 1024;
  PromptTemplate prompt{DefaultPrompt()};
  PromptTemplate reprompt{DefaultReprompt()};
  std::string system_text =
      "You are a careful research assistant deciding which papers belong in the related work section of a paper.";

  void Validate() const;
  static std::string DefaultPrompt();
  static std::string DefaultReprompt();
};

struct DebateVerdict {
  std::vector<std::string> arguments_for;
  std::vector<std::string> arguments_against;
  std::vector<std::string> excerpts;
  double probability = 0.0;
};

/// Reads the fenced ```verdict JSON block, tolerating prose around it; falls
/// back to any JSON object with a "probability" member, then to a
/// "probability: x" phrase. Percentages in (1, 100] are scaled down.
std::optional<DebateVerdict> ParseDebateVerdict(std::string_view raw);

/// Collapses whitespace runs and strips surrounding quotes.
std::string NormalizeExcerpt(std::string_view s);

/// True iff every excerpt, normalized, is a contiguous case-sensitive
/// substring of the whitespace-collapsed source.
bool VerifyAttribution(const std::vector<std::string>& excerpts, std::string_view source_abstract);

/// One candidate, one completion plus up to max_attribution_retries
/// re-prompts. With verification on, excerpts that are not in the abstract
/// never reach the returned evidence. A verdict that never parses yields
/// score 0 flagged "unparseable_verdict".
RankEvidence DebateRankOne(llm::Gateway& gateway, const PaperRecord& candidate, const QueryAbstract& query,
                           const DebateConfig& cfg);

/// Orders by score descending, ties by paper_id; under demote_to_tail every
/// verified candidate precedes every unverified one.
RankedList RerankDebate(llm::Gateway& gateway, const CandidateSet& pool, const QueryAbstract& query,
                        const DebateConfig& cfg);

/// Sort used by RerankDebate, exposed for reuse on precomputed evidence.
std::vector<std::string> OrderByEvidence(const std::map<std::string, RankEvidence>& evidence,
                                         UnverifiedPolicy policy);

}  // namespace litrev::rerank
