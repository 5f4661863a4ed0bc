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
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litrev/dataset_builder.hpp"
#include "litrev/evaluation.hpp"
#include "litrev/generation.hpp"
#include "litrev/llm_gateway.hpp"
#include "litrev/query_generation.hpp"
#include "litrev/reranking.hpp"
#include "litrev/retrieval.hpp"
#include "litrev/types.hpp"

namespace litrev::service {

inline constexpr const char* kApiVersion = "1";

/// Which chat backend a run talks to.
enum class LlmMode { kSynthetic, kScripted, kHttp };

/// Run configuration. JSON keys mirror the field names; see README for the
/// schema. Unknown keys are rejected.
struct RunConfig {
  std::vector<retrieval::SearchBackend> backends;
  int query_count = 3;
  int pool_target = 100;
  int per_query_depth = 0;
  int retrieval_parallelism = 4;
  std::optional<std::filesystem::path> cache_dir;

  RankStrategy rerank = RankStrategy::kDebate;
  int debate_max_attribution_retries = 2;
  rerank::UnverifiedPolicy debate_unverified_policy = rerank::UnverifiedPolicy::kDemoteToTail;
  bool debate_verify_attribution = true;
  int debate_parallelism = 1;
  int permutation_window = 20;
  int permutation_stride = 10;
  std::size_t embedding_dim = 256;
  /// Embed candidates the backend returned without a vector.
  bool embed_missing_candidates = false;

  gen::Strategy generation = gen::Strategy::kPlanGiven;
  int top_k = 5;
  std::optional<std::filesystem::path> prompts_dir;

  std::vector<int> k_grid = eval::DefaultKGrid();
  std::uint64_t seed = 0;
  std::optional<std::int64_t> token_budget;

  LlmMode llm = LlmMode::kSynthetic;
  std::optional<std::filesystem::path> mock_script;
  llm::ProviderConfig provider;
  int llm_max_attempts = 5;

  std::filesystem::path runs_dir = "runs";

  /// Throws InvalidArgument.
  void Validate() const;
  static RunConfig FromJson(const nlohmann::json& j);
  static RunConfig FromFile(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
  /// LITREV_RUNS_DIR, LITREV_CACHE_DIR and the provider variables.
  void ApplyEnvironment();
};

/// runs/{run_id}/{config,pool,ranked,review,metrics,transcript}.json
class RunStore {
 public:
  static constexpr const char* kFiles[] = {"config", "pool", "ranked", "review", "metrics", "transcript"};

  explicit RunStore(std::filesystem::path root);

  std::filesystem::path Dir(const std::string& run_id) const;
  /// Atomic: temporary file then rename.
  void Write(const std::string& run_id, const std::string& name, const nlohmann::json& doc) const;
  std::optional<nlohmann::json> Read(const std::string& run_id, const std::string& name) const;
  bool Exists(const std::string& run_id) const;
  /// Every present stage file keyed by name plus "run_id"; NotFound when
  /// the run does not exist.
  nlohmann::json Load(const std::string& run_id) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

struct RetrieveOutcome {
  std::string run_id;
  std::vector<KeywordQuery> queries;
  CandidateSet pool;
  retrieval::PoolReport pool_report;
  RankedList ranked;
};

struct GenerateOutcome {
  std::string run_id;
  gen::GenerationRequest request;
  std::map<CitationKey, std::string> key_to_paper;
  gen::GeneratedReview review;
  eval::Coverage coverage;
  std::optional<eval::AdherenceRecord> adherence;
};

/// Everything a full run produced, as persisted.
struct RunArtifact {
  std::string run_id;
  nlohmann::json config;
  nlohmann::json pool;
  nlohmann::json ranked;
  nlohmann::json review;
  nlohmann::json metrics;
  nlohmann::json transcript;

  nlohmann::json ToJson() const;
  /// Same document with every "timestamp" member removed.
  nlohmann::json ToJsonWithoutTimestamps() const;
};

/// Optional ground truth for evaluating a run.
struct GroundTruth {
  std::set<std::string> paper_ids;
  std::optional<std::string> related_work;
};

struct RunOutcome {
  RetrieveOutcome retrieved;
  std::optional<GenerateOutcome> generated;  // empty when the pool was empty
  std::optional<eval::MetricReport> report;
};

/// Proposed plan for k selected papers: one sentence per paper in rank
/// order, about 25 words each.
gen::SentencePlan SuggestPlan(int num_papers);

/// Stage-labelled orchestration of query generation, pool assembly,
/// reranking and generation. Each call gets a fresh gateway handle over the
/// shared backend, so transcripts and budgets are per run.
class Pipeline {
 public:
  Pipeline(RunConfig cfg, std::shared_ptr<llm::ChatBackend> backend,
           std::vector<std::shared_ptr<retrieval::SearchClient>> clients, llm::GatewayOptions gateway_opts = {});

  /// Builds the backend and search clients named by `cfg`.
  static Pipeline FromConfig(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const RunStore& store() const { return store_; }

  std::string RunIdFor(const QueryAbstract& abstract) const;

  /// Stages: query_generation, retrieval, rerank. Persists config, pool,
  /// ranked and transcript.
  RetrieveOutcome Retrieve(const QueryAbstract& abstract);

  /// Keys are assigned densely in the given order (first = @cite_1). With a
  /// `run_id`, writes into that run; otherwise derives a new one. Stage:
  /// generation. Persists review, metrics and transcript.
  GenerateOutcome Generate(const QueryAbstract& abstract, const std::vector<PaperRecord>& papers,
                           gen::Strategy strategy, std::optional<gen::SentencePlan> plan,
                           std::optional<std::string> run_id = std::nullopt);

  /// Retrieve, take the top_k, generate and evaluate. The report's query id
  /// is the abstract's source_id, or the run id when that is empty.
  RunOutcome Execute(const QueryAbstract& abstract, const GroundTruth& truth = {});

  /// Execute, then reload everything persisted for the run.
  RunArtifact RunFull(const QueryAbstract& abstract, const GroundTruth& truth = {});

  /// Pool size reachable for `abstract` (query generation and retrieval
  /// only, nothing persisted).
  std::size_t ProbePoolSize(const QueryAbstract& abstract);

 private:
  llm::Gateway NewGateway() const;
  RankedList Rerank(llm::Gateway& gw, const CandidateSet& pool, const QueryAbstract& abstract) const;
  void AppendTranscript(const std::string& run_id, const llm::Gateway& gw) const;

  RunConfig cfg_;
  std::shared_ptr<llm::ChatBackend> backend_;
  std::vector<std::shared_ptr<retrieval::SearchClient>> clients_;
  llm::GatewayOptions gateway_opts_;
  std::unique_ptr<retrieval::ResponseCache> cache_;
  RunStore store_;
  gen::GenerationTemplates templates_;
};

struct BatchResult {
  eval::MetricReport report;
  std::vector<std::string> run_ids;
};

/// Executes every example with its cited papers as ground truth and builds
/// one report over all of them.
BatchResult RunBatch(Pipeline& pipeline, const std::vector<dataset::EvalExample>& examples);

}  // namespace litrev::service
