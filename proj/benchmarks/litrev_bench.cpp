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


#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "litrev/embedding_store.hpp"
#include "litrev/evaluation.hpp"
#include "litrev/generation.hpp"
#include "litrev/reranking.hpp"
#include "litrev/retrieval.hpp"

namespace {

using namespace litrev;

eval::RetrievalJudgment RandomJudgment(std::mt19937_64& rng, int n, int gt) {
  eval::RetrievalJudgment j;
  j.query_id = "q";
  std::vector<int> ids(static_cast<std::size_t>(n * 2));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int i = 0; i < n; ++i) j.retrieved.push_back("p" + std::to_string(ids[static_cast<std::size_t>(i)]));
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int i = 0; i < gt; ++i) j.ground_truth.insert("p" + std::to_string(ids[static_cast<std::size_t>(i)]));
  return j;
}

void BM_MetricsAllK(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto j = RandomJudgment(rng, static_cast<int>(state.range(0)), 40);
  for (auto _ : state) {
    for (int k : eval::DefaultKGrid()) {
      benchmark::DoNotOptimize(eval::PrecisionAtK(j, k));
      benchmark::DoNotOptimize(eval::NormalizedRecallAtK(j, k));
    }
  }
}
BENCHMARK(BM_MetricsAllK)->Arg(100)->Arg(1000);

void BM_MergeRoundRobin(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::vector<std::vector<PaperRecord>> lists(static_cast<std::size_t>(m));
  for (int q = 0; q < m; ++q) {
    for (int i = 0; i < 100; ++i) {
      PaperRecord p;
      // Half the ids repeat across queries.
      p.paper_id = (i % 2 ? "shared-" : "q" + std::to_string(q) + "-") + std::to_string(i);
      p.publication_date = Date{std::chrono::year{2020}, std::chrono::month{1}, std::chrono::day{1}};
      lists[static_cast<std::size_t>(q)].push_back(p);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(retrieval::MergeRoundRobin(lists, 100));
}
BENCHMARK(BM_MergeRoundRobin)->Arg(3)->Arg(10);

void BM_TopKGlobal(benchmark::State& state) {
  const int shards = static_cast<int>(state.range(0));
  const int dim = 256;
  const int per = 20000 / shards;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss(0, 1);
  std::vector<embedding::ShardIndex> built;
  for (int s = 0; s < shards; ++s) {
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (int i = 0; i < per; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = gauss(rng);
      rows.emplace_back("s" + std::to_string(s) + "-" + std::to_string(i), std::move(v));
    }
    built.push_back(embedding::ShardIndex::FromVectors(s, std::move(rows)));
  }
  std::vector<const embedding::ShardIndex*> ptrs;
  for (const auto& b : built) ptrs.push_back(&b);
  std::vector<double> q(dim);
  for (auto& x : q) x = gauss(rng);
  for (auto _ : state) benchmark::DoNotOptimize(embedding::TopKGlobal(ptrs, q, 100, 100, shards));
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_TopKGlobal)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Rouge(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const char* vocab[] = {"graph", "neural", "retrieval", "ranking", "papers", "the", "of", "model", "we", "study"};
  auto sentence = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += std::string(vocab[rng() % 10]) + " ";
    return s;
  };
  const auto ref = sentence(static_cast<int>(state.range(0)));
  const auto hyp = sentence(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval::Rouge(ref, hyp, eval::RougeVariant::k2));
    benchmark::DoNotOptimize(eval::Rouge(ref, hyp, eval::RougeVariant::kL));
  }
}
BENCHMARK(BM_Rouge)->Arg(120)->Arg(600);

void BM_PlanRoundTrip(benchmark::State& state) {
  const std::string plan =
      "Please generate 5 sentences in 120 words. Cite @cite_1 at line 1 and 3. Cite @cite_2 at line 2 and 5. Cite "
      "@cite_3 at line 4 and 5.";
  for (auto _ : state) benchmark::DoNotOptimize(gen::RenderPlan(gen::ParsePlan(plan)));
}
BENCHMARK(BM_PlanRoundTrip);

void BM_ClassifyPermutation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  std::string raw;
  for (int v : perm) raw += (raw.empty() ? "[" : " > [") + std::to_string(v) + "]";
  for (auto _ : state) benchmark::DoNotOptimize(rerank::RepairPermutation(rerank::ClassifyPermutation(raw, n), n));
}
BENCHMARK(BM_ClassifyPermutation)->Arg(20)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
