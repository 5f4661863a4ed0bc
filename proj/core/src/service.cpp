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

#include "litrev/service.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>

#include "litrev/embedding_store.hpp"
#include "litrev/error.hpp"
#include "litrev/synthetic_backend.hpp"
#include "litrev/text.hpp"

namespace litrev::service {

using nlohmann::json;

namespace {

[[noreturn]] void Invalid(const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); }

void CheckKeys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) Invalid(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) Invalid("unknown config key '" + std::string(where) + "." + key + "'");
  }
}

std::string_view ToString(LlmMode m) {
  switch (m) {
    case LlmMode::kSynthetic: return "synthetic";
    case LlmMode::kScripted: return "scripted";
    case LlmMode::kHttp: return "http";
  }
  return "synthetic";
}

LlmMode ParseLlmMode(std::string_view s) {
  if (s == "synthetic") return LlmMode::kSynthetic;
  if (s == "scripted") return LlmMode::kScripted;
  if (s == "http") return LlmMode::kHttp;
  Invalid("unknown llm mode '" + std::string(s) + "'");
}

template <typename F>
auto InStage(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.WithStage(stage);
  }
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

json PlanJson(const std::optional<gen::SentencePlan>& plan) { return plan ? gen::ToJson(*plan) : json(); }

json CoverageJson(const eval::Coverage& c) {
  auto keys = [](const std::set<CitationKey>& ks) {
    auto arr = json::array();
    for (const auto& k : ks) arr.push_back(k.ToString());
    return arr;
  };
  return {{"covered", c.covered}, {"found", keys(c.found)}, {"missing", keys(c.missing)},
          {"spurious", keys(c.spurious)}};
}

json AdherenceJson(const std::optional<eval::AdherenceRecord>& a) {
  if (!a) return json();
  return {{"planned_lines", a->planned_lines}, {"generated_lines", a->generated_lines}, {"diff", a->diff},
          {"exact", a->exact()}};
}

void StripKey(json& j, const std::string& key) {
  if (j.is_object()) {
    j.erase(key);
    for (auto& [_, v] : j.items()) StripKey(v, key);
  } else if (j.is_array()) {
    for (auto& v : j) StripKey(v, key);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::Validate() const {
  if (backends.empty()) Invalid("at least one retrieval backend is required");
  if (query_count < 1) Invalid("query_count must be >= 1");
  if (pool_target < 1) Invalid("pool_target must be >= 1");
  if (per_query_depth < 0) Invalid("per_query_depth must be >= 0");
  if (retrieval_parallelism < 1) Invalid("retrieval parallelism must be >= 1");
  if (debate_max_attribution_retries < 0 || debate_max_attribution_retries > 5) {
    Invalid("max_attribution_retries must be within 0..5");
  }
  if (debate_parallelism < 1) Invalid("debate parallelism must be >= 1");
  if (permutation_window < 2 || permutation_stride < 1 || permutation_stride >= permutation_window) {
    Invalid("permutation window must be >= 2 and stride within 1..window-1");
  }
  if (embedding_dim < 1) Invalid("embedding dim must be >= 1");
  if (top_k < 1) Invalid("top_k must be >= 1");
  if (k_grid.empty()) Invalid("k_grid must not be empty");
  for (int k : k_grid) {
    if (k < 1) Invalid("k_grid values must be >= 1");
  }
  if (token_budget && *token_budget < 1) Invalid("token_budget must be >= 1");
  if (llm == LlmMode::kScripted && !mock_script) Invalid("llm mode 'scripted' needs mock_script");
  if (llm == LlmMode::kHttp && provider.endpoint.empty()) Invalid("llm mode 'http' needs provider.endpoint");
  if (llm_max_attempts < 1) Invalid("llm max_attempts must be >= 1");
}

RunConfig RunConfig::FromJson(const json& j) {
  CheckKeys(j, "config", {"retrieval", "rerank", "generation", "evaluation", "llm", "seed", "token_budget",
                          "runs_dir"});
  RunConfig c;
  if (j.contains("retrieval")) {
    const auto& r = j["retrieval"];
    CheckKeys(r, "retrieval",
              {"backends", "query_count", "pool_target", "per_query_depth", "parallelism", "cache_dir"});
    for (const auto& b : r.value("backends", json::array())) c.backends.push_back(retrieval::SearchBackend::FromJson(b));
    c.query_count = r.value("query_count", c.query_count);
    c.pool_target = r.value("pool_target", c.pool_target);
    c.per_query_depth = r.value("per_query_depth", c.per_query_depth);
    c.retrieval_parallelism = r.value("parallelism", c.retrieval_parallelism);
    if (r.contains("cache_dir") && r["cache_dir"].is_string()) c.cache_dir = r["cache_dir"].get<std::string>();
  }
  if (j.contains("rerank")) {
    const auto& r = j["rerank"];
    CheckKeys(r, "rerank", {"strategy", "debate", "permutation", "embedding"});
    if (r.contains("strategy")) c.rerank = ParseRankStrategy(r["strategy"].get<std::string>());
    if (r.contains("debate")) {
      const auto& d = r["debate"];
      CheckKeys(d, "rerank.debate", {"max_attribution_retries", "unverified_policy", "verify_attribution", "parallelism"});
      c.debate_max_attribution_retries = d.value("max_attribution_retries", c.debate_max_attribution_retries);
      if (d.contains("unverified_policy")) {
        c.debate_unverified_policy = rerank::ParseUnverifiedPolicy(d["unverified_policy"].get<std::string>());
      }
      c.debate_verify_attribution = d.value("verify_attribution", c.debate_verify_attribution);
      c.debate_parallelism = d.value("parallelism", c.debate_parallelism);
    }
    if (r.contains("permutation")) {
      const auto& p = r["permutation"];
      CheckKeys(p, "rerank.permutation", {"window_size", "stride"});
      c.permutation_window = p.value("window_size", c.permutation_window);
      c.permutation_stride = p.value("stride", c.permutation_stride);
    }
    if (r.contains("embedding")) {
      const auto& e = r["embedding"];
      CheckKeys(e, "rerank.embedding", {"dim", "embed_missing_candidates"});
      c.embedding_dim = e.value("dim", c.embedding_dim);
      c.embed_missing_candidates = e.value("embed_missing_candidates", c.embed_missing_candidates);
    }
  }
  if (j.contains("generation")) {
    const auto& g = j["generation"];
    CheckKeys(g, "generation", {"strategy", "top_k", "prompts_dir"});
    if (g.contains("strategy")) c.generation = gen::ParseStrategy(g["strategy"].get<std::string>());
    c.top_k = g.value("top_k", c.top_k);
    if (g.contains("prompts_dir") && g["prompts_dir"].is_string()) c.prompts_dir = g["prompts_dir"].get<std::string>();
  }
  if (j.contains("evaluation")) {
    const auto& e = j["evaluation"];
    CheckKeys(e, "evaluation", {"k_grid"});
    if (e.contains("k_grid")) c.k_grid = e["k_grid"].get<std::vector<int>>();
  }
  if (j.contains("llm")) {
    const auto& l = j["llm"];
    CheckKeys(l, "llm", {"mode", "mock_script", "provider", "max_attempts"});
    if (l.contains("mode")) c.llm = ParseLlmMode(l["mode"].get<std::string>());
    if (l.contains("mock_script") && l["mock_script"].is_string()) c.mock_script = l["mock_script"].get<std::string>();
    if (l.contains("provider")) c.provider = llm::ProviderConfig::FromJson(l["provider"]);
    c.llm_max_attempts = l.value("max_attempts", c.llm_max_attempts);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("token_budget") && !j["token_budget"].is_null()) c.token_budget = j["token_budget"].get<std::int64_t>();
  if (j.contains("runs_dir")) c.runs_dir = j["runs_dir"].get<std::string>();
  c.Validate();
  return c;
}

RunConfig RunConfig::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    Invalid("config " + path.string() + ": " + e.what());
  }
  auto c = FromJson(j);
  // Fixture paths are relative to the config file.
  const auto base = path.parent_path();
  for (auto& b : c.backends) {
    if (b.kind == retrieval::BackendKind::kLocalFixture) b.endpoint = Resolve(base, b.endpoint).string();
  }
  if (c.mock_script) c.mock_script = Resolve(base, *c.mock_script);
  if (c.prompts_dir) c.prompts_dir = Resolve(base, *c.prompts_dir);
  return c;
}

json RunConfig::ToJson() const {
  auto backends_json = json::array();
  for (const auto& b : backends) backends_json.push_back(b.ToJson());
  json retrieval = {{"backends", backends_json},
                    {"query_count", query_count},
                    {"pool_target", pool_target},
                    {"per_query_depth", per_query_depth},
                    {"parallelism", retrieval_parallelism}};
  if (cache_dir) retrieval["cache_dir"] = cache_dir->string();
  json generation_json = {{"strategy", std::string(gen::ToString(generation))}, {"top_k", top_k}};
  if (prompts_dir) generation_json["prompts_dir"] = prompts_dir->string();
  // The API key is never written out.
  json provider_json = {{"endpoint", provider.endpoint},
                        {"path", provider.path},
                        {"model", provider.model_id},
                        {"timeout_seconds", provider.timeout_seconds}};
  json llm_json = {{"mode", std::string(ToString(llm))}, {"provider", provider_json}, {"max_attempts", llm_max_attempts}};
  if (mock_script) llm_json["mock_script"] = mock_script->string();
  return {{"retrieval", retrieval},
          {"rerank",
           {{"strategy", std::string(litrev::ToString(rerank))},
            {"debate",
             {{"max_attribution_retries", debate_max_attribution_retries},
              {"unverified_policy", std::string(rerank::ToString(debate_unverified_policy))},
              {"verify_attribution", debate_verify_attribution},
              {"parallelism", debate_parallelism}}},
            {"permutation", {{"window_size", permutation_window}, {"stride", permutation_stride}}},
            {"embedding", {{"dim", embedding_dim}, {"embed_missing_candidates", embed_missing_candidates}}}}},
          {"generation", generation_json},
          {"evaluation", {{"k_grid", k_grid}}},
          {"llm", llm_json},
          {"seed", seed},
          {"token_budget", token_budget ? json(*token_budget) : json()},
          {"runs_dir", runs_dir.string()}};
}

void RunConfig::ApplyEnvironment() {
  if (const char* v = std::getenv("LITREV_RUNS_DIR")) runs_dir = v;
  if (const char* v = std::getenv("LITREV_CACHE_DIR")) cache_dir = v;
  provider.ApplyEnvironment();
}

// ---------------------------------------------------------------------------
// RunStore

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path RunStore::Dir(const std::string& run_id) const {
  if (run_id.empty() || run_id.find_first_of("/\\.") != std::string::npos) Invalid("invalid run id '" + run_id + "'");
  return root_ / run_id;
}

void RunStore::Write(const std::string& run_id, const std::string& name, const json& doc) const {
  const auto dir = Dir(run_id);
  std::filesystem::create_directories(dir);
  const auto final_path = dir / (name + ".json");
  auto tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, final_path);
}

std::optional<json> RunStore::Read(const std::string& run_id, const std::string& name) const {
  const auto path = Dir(run_id) / (name + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

bool RunStore::Exists(const std::string& run_id) const { return std::filesystem::is_directory(Dir(run_id)); }

json RunStore::Load(const std::string& run_id) const {
  if (!Exists(run_id)) throw Error(ErrorCode::kNotFound, "run '" + run_id + "' does not exist");
  json out = {{"run_id", run_id}};
  for (const char* name : kFiles) {
    auto doc = Read(run_id, name);
    out[name] = doc ? *doc : json();
  }
  return out;
}

// ---------------------------------------------------------------------------
// RunArtifact

json RunArtifact::ToJson() const {
  return {{"run_id", run_id}, {"config", config},   {"pool", pool},          {"ranked", ranked},
          {"review", review}, {"metrics", metrics}, {"transcript", transcript}};
}

json RunArtifact::ToJsonWithoutTimestamps() const {
  auto j = ToJson();
  StripKey(j, "timestamp");
  return j;
}

gen::SentencePlan SuggestPlan(int num_papers) {
  if (num_papers < 1) Invalid("a plan needs at least one paper");
  gen::SentencePlan plan;
  plan.num_sentences = num_papers;
  plan.num_words = 25 * num_papers;
  for (int i = 1; i <= num_papers; ++i) plan.assignments[i].insert(CitationKey{i});
  return plan;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::mutex& StoreMutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

Pipeline::Pipeline(RunConfig cfg, std::shared_ptr<llm::ChatBackend> backend,
                   std::vector<std::shared_ptr<retrieval::SearchClient>> clients, llm::GatewayOptions gateway_opts)
    : cfg_(std::move(cfg)),
      backend_(std::move(backend)),
      clients_(std::move(clients)),
      gateway_opts_(std::move(gateway_opts)),
      store_(cfg_.runs_dir) {
  cfg_.Validate();
  if (!backend_) Invalid("pipeline needs a chat backend");
  if (clients_.empty()) Invalid("pipeline needs at least one search client");
  if (cfg_.cache_dir) cache_ = std::make_unique<retrieval::ResponseCache>(*cfg_.cache_dir);
  if (cfg_.prompts_dir) templates_ = gen::GenerationTemplates::LoadFromDir(*cfg_.prompts_dir);
  gateway_opts_.token_budget = cfg_.token_budget;
  gateway_opts_.retry.max_attempts = cfg_.llm_max_attempts;
  if (gateway_opts_.default_model_id.empty()) gateway_opts_.default_model_id = cfg_.provider.model_id;
}

Pipeline Pipeline::FromConfig(RunConfig cfg) {
  std::shared_ptr<llm::ChatBackend> backend;
  switch (cfg.llm) {
    case LlmMode::kSynthetic:
      backend = std::make_shared<llm::SyntheticBackend>();
      break;
    case LlmMode::kScripted:
      backend = std::make_shared<llm::ScriptedBackend>(llm::MockScript::FromFile(*cfg.mock_script));
      break;
    case LlmMode::kHttp:
      backend = std::make_shared<llm::HttpChatBackend>(cfg.provider);
      break;
  }
  std::vector<std::shared_ptr<retrieval::SearchClient>> clients;
  for (const auto& b : cfg.backends) clients.push_back(retrieval::MakeSearchClient(b));
  return Pipeline(std::move(cfg), std::move(backend), std::move(clients));
}

llm::Gateway Pipeline::NewGateway() const { return llm::Gateway(backend_, gateway_opts_); }

namespace {

// Config minus machine-local paths; what a run id and config.json capture.
json PortableConfig(const RunConfig& cfg) {
  auto j = cfg.ToJson();
  j.erase("runs_dir");
  j["retrieval"].erase("cache_dir");
  return j;
}

}  // namespace

std::string Pipeline::RunIdFor(const QueryAbstract& abstract) const {
  const auto cfg = PortableConfig(cfg_);
  const auto date = abstract.publication_date ? FormatDate(*abstract.publication_date) : std::string("-");
  return "r-" + text::Sha256Hex(cfg.dump() + "\n" + abstract.text + "\n" + date).substr(0, 16);
}

RankedList Pipeline::Rerank(llm::Gateway& gw, const CandidateSet& pool, const QueryAbstract& abstract) const {
  if (pool.candidates.empty()) {
    RankedList empty;
    empty.query_id = abstract.source_id;
    empty.strategy = cfg_.rerank;
    return empty;
  }
  switch (cfg_.rerank) {
    case RankStrategy::kPermutation: {
      rerank::PermutationConfig pc;
      pc.window_size = cfg_.permutation_window;
      pc.stride = cfg_.permutation_stride;
      return rerank::RerankPermutation(gw, pool, abstract, pc).ranked;
    }
    case RankStrategy::kEmbedding: {
      embedding::HashEmbeddingProvider provider(cfg_.embedding_dim, cfg_.seed);
      if (!cfg_.embed_missing_candidates) return embedding::RankCandidatesByEmbedding(abstract, provider, pool);
      auto filled = pool;
      for (auto& c : filled.candidates) {
        if (!c.embedding) c.embedding = provider.Embed(c.title + " " + c.abstract);
      }
      return embedding::RankCandidatesByEmbedding(abstract, provider, filled);
    }
    case RankStrategy::kDebate: {
      rerank::DebateConfig dc;
      dc.max_attribution_retries = cfg_.debate_max_attribution_retries;
      dc.unverified_policy = cfg_.debate_unverified_policy;
      dc.verify_attribution = cfg_.debate_verify_attribution;
      dc.parallelism = cfg_.debate_parallelism;
      return rerank::RerankDebate(gw, pool, abstract, dc);
    }
  }
  Invalid("unknown rerank strategy");
}

void Pipeline::AppendTranscript(const std::string& run_id, const llm::Gateway& gw) const {
  auto doc = store_.Read(run_id, "transcript").value_or(json::array());
  if (!doc.is_array()) doc = json::array();
  for (const auto& e : gw.Transcript()) doc.push_back(e.ToJson());
  store_.Write(run_id, "transcript", doc);
}

RetrieveOutcome Pipeline::Retrieve(const QueryAbstract& abstract) {
  auto gw = NewGateway();
  RetrieveOutcome out;
  out.run_id = RunIdFor(abstract);

  out.queries = InStage("query_generation", [&] { return GenerateQueries(gw, abstract, cfg_.query_count); });

  auto assembled = InStage("retrieval", [&] {
    retrieval::PoolOptions po;
    po.target = cfg_.pool_target;
    po.per_query_depth = cfg_.per_query_depth;
    po.parallelism = cfg_.retrieval_parallelism;
    po.cache = cache_.get();
    std::vector<retrieval::SearchClient*> raw;
    for (const auto& c : clients_) raw.push_back(c.get());
    return retrieval::AssemblePool(abstract, raw, out.queries, po);
  });
  out.pool = std::move(assembled.pool);
  out.pool_report = assembled.report;

  out.ranked = InStage("rerank", [&] { return Rerank(gw, out.pool, abstract); });

  auto queries_json = json::array();
  for (const auto& q : out.queries) queries_json.push_back({{"rank", q.rank}, {"terms", q.terms}});
  const auto& st = out.pool_report.stats;
  json report = {{"dropped", st.dropped},
                 {"backend_requests", st.backend_requests},
                 {"cache_hits", st.cache_hits},
                 {"underflow", out.pool_report.underflow ? json(*out.pool_report.underflow) : json()}};

  std::lock_guard lock(StoreMutex());
  // A repeated run starts from a clean transcript.
  std::filesystem::remove(store_.Dir(out.run_id) / "transcript.json");
  store_.Write(out.run_id, "config", PortableConfig(cfg_));
  store_.Write(out.run_id, "pool", {{"queries", queries_json}, {"candidate_set", out.pool}, {"report", report}});
  store_.Write(out.run_id, "ranked", out.ranked);
  AppendTranscript(out.run_id, gw);
  return out;
}

GenerateOutcome Pipeline::Generate(const QueryAbstract& abstract, const std::vector<PaperRecord>& papers,
                                   gen::Strategy strategy, std::optional<gen::SentencePlan> plan,
                                   std::optional<std::string> run_id) {
  auto gw = NewGateway();
  GenerateOutcome out;
  InStage("generation", [&] {
    if (papers.empty()) Invalid("no papers selected for generation");
    out.request.query_abstract = abstract.text;
    out.request.strategy = strategy;
    out.request.plan = std::move(plan);
    for (std::size_t i = 0; i < papers.size(); ++i) {
      const CitationKey key{static_cast<int>(i) + 1};
      out.request.references[key] = papers[i].abstract;
      out.key_to_paper[key] = papers[i].paper_id;
    }
    gen::GenerationOptions go;
    go.templates = templates_;
    out.review = gen::Generate(gw, out.request, go);
  });

  out.coverage = eval::ComputeCoverage(out.review.text, out.request.Keys());
  if (out.request.plan) {
    out.adherence = eval::PlanAdherence(out.review, *out.request.plan);
  } else if (out.review.plan_echo) {
    out.adherence = eval::PlanAdherence(out.review, *out.review.plan_echo);
  }

  if (run_id) {
    out.run_id = *run_id;
  } else {
    std::string ids;
    for (const auto& p : papers) ids += p.paper_id + ",";
    out.run_id = "r-" + text::Sha256Hex("generate\n" + RunIdFor(abstract) + "\n" + ids + "\n" +
                                        std::string(gen::ToString(strategy)) + "\n" +
                                        (out.request.plan ? gen::RenderPlan(*out.request.plan) : std::string()))
                            .substr(0, 16);
  }

  json key_map = json::object();
  for (const auto& [k, id] : out.key_to_paper) key_map[k.ToString()] = id;
  json review_doc = {{"strategy", std::string(gen::ToString(strategy))},
                     {"plan", PlanJson(out.request.plan)},
                     {"key_to_paper", key_map},
                     {"review", gen::ToJson(out.review)}};
  json metrics_doc = {{"coverage", CoverageJson(out.coverage)}, {"adherence", AdherenceJson(out.adherence)},
                      {"report", json()}};

  std::lock_guard lock(StoreMutex());
  if (!store_.Read(out.run_id, "config")) store_.Write(out.run_id, "config", PortableConfig(cfg_));
  store_.Write(out.run_id, "review", review_doc);
  store_.Write(out.run_id, "metrics", metrics_doc);
  AppendTranscript(out.run_id, gw);
  return out;
}

RunOutcome Pipeline::Execute(const QueryAbstract& abstract, const GroundTruth& truth) {
  RunOutcome out;
  out.retrieved = Retrieve(abstract);
  const auto& retrieved = out.retrieved;

  std::vector<PaperRecord> top;
  for (const auto& id : retrieved.ranked.ordering) {
    if (static_cast<int>(top.size()) == cfg_.top_k) break;
    if (const auto* p = retrieved.pool.Find(id)) top.push_back(*p);
  }
  if (top.empty()) return out;

  std::optional<gen::SentencePlan> plan;
  if (cfg_.generation == gen::Strategy::kPlanGiven || cfg_.generation == gen::Strategy::kSentenceBySentence) {
    plan = SuggestPlan(static_cast<int>(top.size()));
  }
  out.generated = Generate(abstract, top, cfg_.generation, plan, retrieved.run_id);
  const auto& generated = *out.generated;

  const auto query_id = abstract.source_id.empty() ? retrieved.run_id : abstract.source_id;
  eval::RetrievalJudgment judgment{query_id, retrieved.ranked.ordering, truth.paper_ids};
  eval::ReviewInput review_in{query_id, generated.review, generated.request.Keys(),
                              generated.request.plan ? generated.request.plan : generated.review.plan_echo,
                              truth.related_work};
  out.report = InStage("evaluation", [&] { return eval::BuildReport({judgment}, {review_in}, cfg_.k_grid); });

  std::lock_guard lock(StoreMutex());
  auto metrics = store_.Read(retrieved.run_id, "metrics").value_or(json::object());
  metrics["report"] = out.report->ToJson();
  store_.Write(retrieved.run_id, "metrics", metrics);
  return out;
}

RunArtifact Pipeline::RunFull(const QueryAbstract& abstract, const GroundTruth& truth) {
  const auto outcome = Execute(abstract, truth);
  const auto& run_id = outcome.retrieved.run_id;
  const auto doc = store_.Load(run_id);
  RunArtifact a;
  a.run_id = run_id;
  a.config = doc["config"];
  a.pool = doc["pool"];
  a.ranked = doc["ranked"];
  a.review = doc["review"];
  a.metrics = doc["metrics"];
  a.transcript = doc["transcript"];
  return a;
}

std::size_t Pipeline::ProbePoolSize(const QueryAbstract& abstract) {
  auto gw = NewGateway();
  const auto queries = InStage("query_generation", [&] { return GenerateQueries(gw, abstract, cfg_.query_count); });
  return InStage("retrieval", [&] {
    retrieval::PoolOptions po;
    po.target = cfg_.pool_target;
    po.per_query_depth = cfg_.per_query_depth;
    po.parallelism = cfg_.retrieval_parallelism;
    po.cache = cache_.get();
    std::vector<retrieval::SearchClient*> raw;
    for (const auto& c : clients_) raw.push_back(c.get());
    return retrieval::AssemblePool(abstract, raw, queries, po).pool.candidates.size();
  });
}

BatchResult RunBatch(Pipeline& pipeline, const std::vector<dataset::EvalExample>& examples) {
  if (examples.empty()) throw Error(ErrorCode::kEmptyInput, "no examples to run");
  BatchResult out;
  std::vector<eval::RetrievalJudgment> judgments;
  std::vector<eval::ReviewInput> reviews;
  for (const auto& ex : examples) {
    auto query = ex.query;
    if (query.source_id.empty()) query.source_id = "example-" + std::to_string(out.run_ids.size() + 1);
    GroundTruth truth;
    for (const auto& p : ex.gt_citations) truth.paper_ids.insert(p.paper_id);
    truth.related_work = ex.gt_related_work;
    auto outcome = pipeline.Execute(query, truth);
    out.run_ids.push_back(outcome.retrieved.run_id);
    judgments.push_back({query.source_id, outcome.retrieved.ranked.ordering, truth.paper_ids});
    if (outcome.generated) {
      const auto& g = *outcome.generated;
      reviews.push_back({query.source_id, g.review, g.request.Keys(),
                         g.request.plan ? g.request.plan : g.review.plan_echo, truth.related_work});
    }
  }
  out.report = eval::BuildReport(judgments, reviews, pipeline.config().k_grid);
  return out;
}

}  // namespace litrev::service
