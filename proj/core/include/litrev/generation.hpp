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
#include "litrev/llm_gateway.hpp"
#include "litrev/prompt_template.hpp"

namespace litrev::gen {

/// Sentence count, word budget and the 1-based lines on which each key must
/// be cited. Lines without citations are not stored.
struct SentencePlan {
  int num_sentences = 1;
  int num_words = 10;
  std::map<int, std::set<CitationKey>> assignments;

  std::map<CitationKey, std::set<int>> LinesByKey() const;
  std::set<CitationKey> Keys() const;

  /// Throws MalformedPlan. An empty `keys` skips the membership checks.
  void Validate(const std::set<CitationKey>& keys = {}) const;

  friend bool operator==(const SentencePlan&, const SentencePlan&) = default;
};

/// "Please generate S sentences in W words. Cite @cite_k at line a, b and c."
/// One clause per key, keys and lines ascending.
std::string RenderPlan(const SentencePlan& plan);

/// Inverse of RenderPlan. Accepts "a and b", "a, b and c", an Oxford comma,
/// "line"/"lines" and several keys in one clause. Throws MalformedPlan.
SentencePlan ParsePlan(std::string_view s, const std::set<CitationKey>& keys = {});

struct DerivedPlan {
  SentencePlan plan;
  bool no_citations_found = false;
};

/// Sentence count and per-line keys from a reference text; the word budget
/// is its word count rounded to the nearest 10 (at least 10). With a
/// non-empty `keys`, citations outside it are ignored.
DerivedPlan DerivePlanFromGroundTruth(std::string_view ground_truth, const std::set<CitationKey>& keys = {},
                                      const SentenceSplitter& splitter = SplitSentences);

enum class Strategy { kZeroShot, kPlanGiven, kPlanLearned, kPerCite, kSentenceBySentence };

std::string_view ToString(Strategy s);
Strategy ParseStrategy(std::string_view s);

struct GenerationRequest {
  std::string query_abstract;
  std::map<CitationKey, std::string> references;  // key -> reference abstract
  Strategy strategy = Strategy::kZeroShot;
  std::optional<SentencePlan> plan;

  std::set<CitationKey> Keys() const;
  /// Throws InvalidArgument on an empty abstract; PlanMissing when the
  /// strategy needs a plan; MalformedPlan when the plan does not fit the keys.
  void Validate() const;
};

struct GeneratedReview {
  std::string text;
  std::vector<std::string> sentences;
  std::vector<CitationKey> cited_keys_in_text;  // text order, repeats kept
  std::optional<SentencePlan> plan_echo;
  std::vector<CitationKey> hallucinated_keys;   // distinct, ascending
  std::vector<std::string> flags;
  int llm_calls = 0;
};

/// One template per strategy. Placeholders: {abstract}, {references},
/// {plan}, {draft}; per-cite also takes {key}, sentence steps take {line},
/// {num_sentences} and {cite_instruction}.
struct GenerationTemplates {
  PromptTemplate zero_shot{DefaultZeroShot()};
  PromptTemplate plan_given{DefaultPlanGiven()};
  PromptTemplate plan_learned{DefaultPlanLearned()};
  PromptTemplate per_cite{DefaultPerCite()};
  PromptTemplate per_cite_merge{DefaultPerCiteMerge()};
  PromptTemplate sentence_step{DefaultSentenceStep()};

  /// Files named zero_shot.txt, plan_given.txt, ... override defaults.
  static GenerationTemplates LoadFromDir(const std::filesystem::path& dir);

  static std::string DefaultZeroShot();
  static std::string DefaultPlanGiven();
  static std::string DefaultPlanLearned();
  static std::string DefaultPerCite();
  static std::string DefaultPerCiteMerge();
  static std::string DefaultSentenceStep();
};

struct GenerationOptions {
  GenerationTemplates templates;
  std::string system_text =
      "You are a helpful research assistant who writes the related work section of a scientific paper.";
  int max_output_tokens = 1024;
  double temperature = 0.0;
  SentenceSplitter splitter = SplitSentences;
  /// Bounded fan-out for the per-cite stage.
  int parallelism = 1;
};

/// Lines "@cite_k: \"\"\"abstract\"\"\"", ascending by key.
std::string RenderReferences(const std::map<CitationKey, std::string>& refs);

/// LLM calls: per_cite K + 1, sentence_by_sentence S, others 1.
GeneratedReview Generate(llm::Gateway& gateway, const GenerationRequest& req, const GenerationOptions& opts = {});

/// Replaces each @cite_k with `command_template` after substituting KEY by
/// the mapped identifier. Throws UnknownKeyInText for an unmapped key.
std::string Relexicalize(std::string_view text, const std::map<CitationKey, std::string>& mapping,
                         std::string_view command_template = "\\cite{KEY}");

nlohmann::json ToJson(const SentencePlan& plan);
nlohmann::json ToJson(const GeneratedReview& review);

}  // namespace litrev::gen
