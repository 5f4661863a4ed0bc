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

// litrev: command line front end for retrieval, generation, evaluation,
// dataset construction, embedding indexes and the HTTP service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "litrev/dataset_builder.hpp"
#include "litrev/embedding_store.hpp"
#include "litrev/error.hpp"
#include "litrev/server.hpp"
#include "litrev/service.hpp"

namespace {

using nlohmann::json;
using namespace litrev;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
}

struct AbstractArgs {
  std::string text;
  std::string file;
  std::string date;
  std::string source_id;

  void Register(CLI::App* cmd) {
    auto* t = cmd->add_option("--abstract", text, "Query abstract text");
    auto* f = cmd->add_option("--abstract-file", file, "File holding the query abstract");
    t->excludes(f);
    cmd->add_option("--date", date, "Publication date of the query paper (YYYY[-MM[-DD]])");
    cmd->add_option("--id", source_id, "Identifier of the query paper");
  }

  QueryAbstract Get() const {
    QueryAbstract q;
    q.text = file.empty() ? text : ReadFile(file);
    if (q.text.empty()) throw Error(ErrorCode::kInvalidArgument, "give --abstract or --abstract-file");
    if (!date.empty()) q.publication_date = ParseDate(date);
    q.source_id = source_id;
    return q;
  }
};

service::RunConfig LoadConfig(const std::string& path) {
  auto cfg = service::RunConfig::FromFile(path);
  cfg.ApplyEnvironment();
  cfg.Validate();
  return cfg;
}

service::ApiServer* g_server = nullptr;

void HandleSignal(int) {
  if (g_server != nullptr) g_server->Stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"litrev: retrieval-augmented literature review tooling"};
  app.require_subcommand(1);

  // retrieve ---------------------------------------------------------------
  std::string config_path;
  AbstractArgs abstract_args;
  auto* retrieve = app.add_subcommand("retrieve", "Generate queries, assemble and rerank a candidate pool");
  retrieve->add_option("--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  abstract_args.Register(retrieve);

  // generate ---------------------------------------------------------------
  std::string run_id, papers_file, strategy = "plan_given", plan_text;
  std::vector<std::string> paper_ids;
  auto* generate = app.add_subcommand("generate", "Write a related-work section from selected papers");
  generate->add_option("--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  abstract_args.Register(generate);
  generate->add_option("--run-id", run_id, "Take papers from this run's pool");
  generate->add_option("--papers", papers_file, "JSON array of paper records to choose from");
  generate->add_option("--paper-ids", paper_ids, "Papers in citation-key order")->delimiter(',');
  generate->add_option("--strategy", strategy,
                       "zero_shot | plan_given | plan_learned | per_cite | sentence_by_sentence");
  generate->add_option("--plan", plan_text, "Sentence plan string; defaults to one sentence per paper");

  // eval run --------------------------------------------------------------
  std::string examples_path, out_dir;
  std::size_t limit = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluation");
  eval_cmd->require_subcommand(1);
  auto* eval_run = eval_cmd->add_subcommand("run", "Run the pipeline over an evaluation set and report metrics");
  eval_run->add_option("--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  eval_run->add_option("--examples", examples_path, "Evaluation set (NDJSON)")->required()->check(CLI::ExistingFile);
  eval_run->add_option("--out", out_dir, "Directory for report.json, report.csv and plot data")->required();
  eval_run->add_option("--limit", limit, "Only the first N examples");

  // dataset ---------------------------------------------------------------
  std::string month, input_path, corpus_path, stats_path, probe_config;
  std::size_t pool_target = 100, sample = 0;
  std::uint64_t seed = 0;
  auto* dataset_cmd = app.add_subcommand("dataset", "Evaluation-set construction");
  dataset_cmd->require_subcommand(1);
  auto* ds_build = dataset_cmd->add_subcommand("build", "Build an evaluation set from raw papers");
  ds_build->add_option("--month", month, "arXiv month tag YYMM")->required();
  ds_build->add_option("--input", input_path, "Raw papers (NDJSON)")->required()->check(CLI::ExistingFile);
  ds_build->add_option("--corpus", corpus_path, "Cited-paper corpus (NDJSON)")->required()->check(CLI::ExistingFile);
  ds_build->add_option("--out", out_dir, "Output examples (NDJSON)")->required();
  ds_build->add_option("--stats", stats_path, "Also write the stats JSON here");
  ds_build->add_option("--pool-target", pool_target, "Pool size a paper must reach to be kept");
  ds_build->add_option("--probe-config", probe_config, "Run configuration used to probe pool feasibility");
  ds_build->add_option("--sample", sample, "Keep a seeded random sample of N examples");
  ds_build->add_option("--seed", seed, "Sampling seed");
  auto* ds_stats = dataset_cmd->add_subcommand("stats", "Summarize an evaluation set");
  ds_stats->add_option("--in", input_path, "Examples (NDJSON)")->required()->check(CLI::ExistingFile);

  // index -----------------------------------------------------------------
  std::vector<std::string> dumps;
  std::string store_dir, vector_json, query_text;
  int k = 10, per_shard = 0, parallelism = 4;
  auto* index_cmd = app.add_subcommand("index", "Sharded embedding index");
  index_cmd->require_subcommand(1);
  auto* ix_build = index_cmd->add_subcommand("build", "Build shards from embedding dumps");
  ix_build->add_option("--dump", dumps, "Embedding dump (NDJSON, optionally .gz); one shard each")->required();
  ix_build->add_option("--out", store_dir, "Store directory")->required();
  ix_build->add_option("--parallelism", parallelism, "Concurrent shard builds");
  auto* ix_query = index_cmd->add_subcommand("query", "Exact top-k neighbours");
  ix_query->add_option("--store", store_dir, "Store directory")->required();
  auto* vec_opt = ix_query->add_option("--vector", vector_json, "Query vector as a JSON array");
  auto* text_opt = ix_query->add_option("--text", query_text, "Embed this text with the hashing provider");
  vec_opt->excludes(text_opt);
  ix_query->add_option("--seed", seed, "Hashing provider seed");
  ix_query->add_option("--k", k, "Neighbours to return");
  ix_query->add_option("--per-shard", per_shard, "Candidates per shard (default k)");
  auto* ix_verify = index_cmd->add_subcommand("verify", "Check shards against the manifest");
  ix_verify->add_option("--store", store_dir, "Store directory")->required();

  // serve -----------------------------------------------------------------
  std::string host = "127.0.0.1", static_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP JSON API");
  serve->add_option("--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--static", static_dir, "Directory of UI assets to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version land here with a zero code; every usage error is 2.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*retrieve) {
      auto pipeline = service::Pipeline::FromConfig(LoadConfig(config_path));
      auto out = pipeline.Retrieve(abstract_args.Get());
      json rows = json::array();
      for (std::size_t i = 0; i < out.ranked.ordering.size(); ++i) {
        const auto& id = out.ranked.ordering[i];
        const auto* p = out.pool.Find(id);
        const auto& ev = out.ranked.evidence.at(id);
        rows.push_back({{"rank", i + 1}, {"paper_id", id}, {"title", p ? p->title : ""}, {"score", ev.score},
                        {"verified", ev.verified}, {"flags", ev.flags}});
      }
      std::cout << json{{"run_id", out.run_id}, {"candidates", rows}}.dump(2) << "\n";
    } else if (*generate) {
      auto pipeline = service::Pipeline::FromConfig(LoadConfig(config_path));
      std::vector<PaperRecord> available;
      std::optional<std::string> lineage;
      if (!run_id.empty()) {
        lineage = run_id;
        auto pool = pipeline.store().Read(run_id, "pool");
        if (!pool) throw Error(ErrorCode::kNotFound, "run " + run_id + " has no pool");
        available = pool->at("candidate_set").get<CandidateSet>().candidates;
      }
      if (!papers_file.empty()) available = json::parse(ReadFile(papers_file)).get<std::vector<PaperRecord>>();
      std::vector<PaperRecord> selected;
      if (paper_ids.empty()) {
        selected = available;
      } else {
        for (const auto& id : paper_ids) {
          auto it = std::find_if(available.begin(), available.end(),
                                 [&](const PaperRecord& p) { return p.paper_id == id; });
          if (it == available.end()) throw Error(ErrorCode::kInvalidArgument, "paper " + id + " not available");
          selected.push_back(*it);
        }
      }
      const auto strat = gen::ParseStrategy(strategy);
      std::optional<gen::SentencePlan> plan;
      if (!plan_text.empty()) {
        plan = gen::ParsePlan(plan_text, DenseKeys(static_cast<int>(selected.size())));
      } else if (strat == gen::Strategy::kPlanGiven || strat == gen::Strategy::kSentenceBySentence) {
        plan = service::SuggestPlan(static_cast<int>(selected.size()));
      }
      auto out = pipeline.Generate(abstract_args.Get(), selected, strat, plan, lineage);
      std::cout << json{{"run_id", out.run_id},
                        {"review", gen::ToJson(out.review)},
                        {"covered", out.coverage.covered},
                        {"adherence_diff", out.adherence ? json(out.adherence->diff) : json()}}
                       .dump(2)
                << "\n";
    } else if (*eval_run) {
      auto pipeline = service::Pipeline::FromConfig(LoadConfig(config_path));
      auto examples = dataset::ReadExamples(examples_path);
      if (limit > 0 && examples.size() > limit) examples.resize(limit);
      auto result = service::RunBatch(pipeline, examples);
      const std::filesystem::path out(out_dir);
      WriteFile(out / "report.json", result.report.ToJson().dump(2) + "\n");
      WriteFile(out / "report.csv", result.report.ToCsv());
      WriteFile(out / "plot.json", result.report.PlotData().dump(2) + "\n");
      result.report.WritePlotFiles(out / "plot");
      std::cout << "evaluated " << examples.size() << " examples; report in " << out.string() << "\n";
    } else if (*ds_build) {
      auto corpus = dataset::CitationCorpus::Load(corpus_path);
      dataset::BuildOptions opts;
      opts.month_tag = month;
      opts.pool_target = pool_target;
      opts.seed = seed;
      if (sample > 0) opts.sample = sample;
      std::unique_ptr<service::Pipeline> probe;
      if (!probe_config.empty()) {
        probe = std::make_unique<service::Pipeline>(service::Pipeline::FromConfig(LoadConfig(probe_config)));
        opts.probe = [&](const QueryAbstract& q) { return probe->ProbePoolSize(q); };
      }
      auto result = dataset::BuildEvalSetFromFile(input_path, corpus, opts);
      dataset::WriteExamples(out_dir, result.examples);
      for (const auto& d : result.drops) {
        std::cerr << "dropped line " << d.line << " (" << (d.paper_id.empty() ? "?" : d.paper_id)
                  << "): " << dataset::ToString(d.reason) << ": " << d.detail << "\n";
      }
      if (!stats_path.empty() && !result.examples.empty()) {
        WriteFile(stats_path, dataset::ComputeStats(result).Serialize());
      }
      std::cout << result.examples.size() << " examples, " << result.drops.size() << " dropped\n";
    } else if (*ds_stats) {
      std::cout << dataset::ComputeStats(dataset::ReadExamples(input_path)).Serialize();
    } else if (*ix_build) {
      std::vector<std::filesystem::path> paths(dumps.begin(), dumps.end());
      std::vector<embedding::BuildReport> reports;
      auto store = embedding::ShardStore::Build(paths, store_dir, parallelism, &reports);
      for (std::size_t i = 0; i < reports.size(); ++i) {
        std::cout << "shard " << i << ": " << store.shards()[i].size() << " vectors, "
                  << reports[i].rejected_zero << " zero, " << reports[i].rejected_duplicate << " duplicate\n";
      }
    } else if (*ix_query) {
      auto store = embedding::ShardStore::Open(store_dir);
      std::vector<double> q;
      if (!vector_json.empty()) {
        q = json::parse(vector_json).get<std::vector<double>>();
      } else if (!query_text.empty()) {
        q = embedding::HashEmbeddingProvider(store.dim(), seed).Embed(query_text);
      } else {
        throw Error(ErrorCode::kInvalidArgument, "give --vector or --text");
      }
      json hits = json::array();
      for (const auto& h : store.Query(q, k, per_shard > 0 ? per_shard : k, parallelism)) {
        hits.push_back({{"paper_id", h.paper_id}, {"score", h.score}, {"shard", h.shard_id}});
      }
      std::cout << hits.dump(2) << "\n";
    } else if (*ix_verify) {
      const auto result = embedding::ShardStore::Open(store_dir).Verify();
      for (const auto& p : result.problems) std::cerr << p << "\n";
      std::cout << (result.ok ? "ok" : "corrupt") << "\n";
      return result.ok ? 0 : 1;
    } else if (*serve) {
      auto pipeline = service::Pipeline::FromConfig(LoadConfig(config_path));
      service::ApiServer server(pipeline);
      if (!static_dir.empty()) server.ServeStatic(static_dir);
      const int bound = port == 0 ? server.BindToAnyPort(host) : server.Bind(host, port);
      if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
      g_server = &server;
      std::signal(SIGINT, HandleSignal);
      std::signal(SIGTERM, HandleSignal);
      std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
      server.ListenAfterBind();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]";
    if (!e.stage().empty()) std::cerr << " in " << e.stage();
    std::cerr << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
