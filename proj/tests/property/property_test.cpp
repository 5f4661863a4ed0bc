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


// Randomized checks against the brute-force oracles. Every generator is
// seeded, so a failure reproduces with the printed iteration.

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "litrev/embedding_store.hpp"
#include "litrev/evaluation.hpp"
#include "litrev/generation.hpp"
#include "litrev/reranking.hpp"
#include "litrev/retrieval.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace litrev {
namespace {

int Uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::vector<std::string> SampleIds(std::mt19937_64& rng, int universe, int n) {
  std::vector<int> pool(static_cast<std::size_t>(universe));
  std::iota(pool.begin(), pool.end(), 0);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("p" + std::to_string(pool[static_cast<std::size_t>(i)]));
  return out;
}

TEST(MetricProperty, MatchesOracleForEveryK) {
  std::mt19937_64 rng(101);
  for (int it = 0; it < 1000; ++it) {
    eval::RetrievalJudgment j;
    j.query_id = "q";
    j.retrieved = SampleIds(rng, 80, Uniform(rng, 0, 50));
    for (const auto& id : SampleIds(rng, 80, Uniform(rng, 0, 20))) j.ground_truth.insert(id);
    for (int k = 1; k <= 55; ++k) {
      ASSERT_DOUBLE_EQ(eval::PrecisionAtK(j, k), oracle::Precision(j.retrieved, j.ground_truth, k)) << it;
      ASSERT_EQ(eval::NormalizedRecallAtK(j, k), oracle::NormalizedRecall(j.retrieved, j.ground_truth, k)) << it;
      ASSERT_EQ(eval::ClassicRecallAtK(j, k), oracle::ClassicRecall(j.retrieved, j.ground_truth, k)) << it;
    }
  }
}

TEST(MetricProperty, NormalizedRecallIsMonotoneAndReachesOne) {
  std::mt19937_64 rng(102);
  for (int it = 0; it < 300; ++it) {
    eval::RetrievalJudgment j{"q", SampleIds(rng, 60, Uniform(rng, 1, 50)), {}};
    for (const auto& id : SampleIds(rng, 60, Uniform(rng, 1, 20))) j.ground_truth.insert(id);
    const auto full = eval::NormalizedRecallAtK(j, static_cast<int>(j.retrieved.size()));
    if (!full) continue;
    EXPECT_DOUBLE_EQ(*full, 1.0);
    double prev = 0;
    for (int k = 1; k <= static_cast<int>(j.retrieved.size()); ++k) {
      const double v = *eval::NormalizedRecallAtK(j, k);
      ASSERT_GE(v, prev);
      prev = v;
    }
  }
}

std::vector<std::vector<PaperRecord>> RandomLists(std::mt19937_64& rng, int universe, bool disjoint) {
  const int m = Uniform(rng, 1, 6);
  std::vector<std::vector<PaperRecord>> lists;
  int next = 0;
  for (int q = 0; q < m; ++q) {
    std::vector<PaperRecord> l;
    const int len = Uniform(rng, 0, 40);
    if (disjoint) {
      for (int i = 0; i < len; ++i) l.push_back(testing::Paper("d" + std::to_string(next++)));
    } else {
      for (const auto& id : SampleIds(rng, universe, std::min(len, universe))) l.push_back(testing::Paper(id));
    }
    lists.push_back(std::move(l));
  }
  return lists;
}

TEST(MergeProperty, SizeUniquenessAndProvenance) {
  std::mt19937_64 rng(103);
  for (int it = 0; it < 500; ++it) {
    const auto lists = RandomLists(rng, 70, false);
    const int target = Uniform(rng, 1, 120);
    std::set<std::string> uni;
    for (const auto& l : lists) {
      for (const auto& p : l) uni.insert(p.paper_id);
    }
    if (uni.empty()) continue;
    const auto merged = retrieval::MergeRoundRobin(lists, target);
    ASSERT_EQ(merged.candidates.size(), std::min<std::size_t>(static_cast<std::size_t>(target), uni.size())) << it;
    std::set<std::string> seen;
    for (const auto& p : merged.candidates) {
      ASSERT_TRUE(seen.insert(p.paper_id).second) << it;
      const auto& src = lists.at(static_cast<std::size_t>(merged.provenance.at(p.paper_id).query_rank - 1));
      ASSERT_TRUE(std::any_of(src.begin(), src.end(), [&](const PaperRecord& r) { return r.paper_id == p.paper_id; }));
    }
  }
}

TEST(MergeProperty, DisjointListsTakePrefixesAndQuotas) {
  std::mt19937_64 rng(104);
  for (int it = 0; it < 500; ++it) {
    const auto lists = RandomLists(rng, 0, true);
    const int target = Uniform(rng, 1, 100);
    if (std::all_of(lists.begin(), lists.end(), [](const auto& l) { return l.empty(); })) continue;
    const auto merged = retrieval::MergeRoundRobin(lists, target);
    std::map<int, std::vector<std::string>> taken;
    for (const auto& p : merged.candidates) taken[merged.provenance.at(p.paper_id).query_rank].push_back(p.paper_id);
    const int m = static_cast<int>(lists.size());
    const int quota_cap = (target + m - 1) / m;
    bool all_long = true;
    for (std::size_t q = 0; q < lists.size(); ++q) {
      const auto& got = taken[static_cast<int>(q) + 1];
      for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i], lists[q][i].paper_id) << it;
      all_long = all_long && static_cast<int>(lists[q].size()) >= quota_cap;
    }
    if (!all_long) continue;
    // Enough papers everywhere: each query gets target/m, earlier queries
    // taking the remainder.
    for (int q = 0; q < m; ++q) {
      ASSERT_EQ(static_cast<int>(taken[q + 1].size()), target / m + (q < target % m ? 1 : 0)) << it;
    }
  }
}

gen::SentencePlan RandomPlan(std::mt19937_64& rng) {
  gen::SentencePlan plan;
  plan.num_sentences = Uniform(rng, 1, 9);
  plan.num_words = Uniform(rng, 1, 400);
  const int keys = Uniform(rng, 1, 7);
  for (int k = 1; k <= keys; ++k) {
    const int uses = Uniform(rng, 1, plan.num_sentences);
    for (int u = 0; u < uses; ++u) plan.assignments[Uniform(rng, 1, plan.num_sentences)].insert(CitationKey{k});
  }
  return plan;
}

TEST(PlanProperty, RenderParseRoundTrip) {
  std::mt19937_64 rng(105);
  for (int it = 0; it < 500; ++it) {
    const auto plan = RandomPlan(rng);
    const auto text = gen::RenderPlan(plan);
    const auto back = gen::ParsePlan(text, plan.Keys());
    ASSERT_EQ(back.num_sentences, plan.num_sentences) << text;
    ASSERT_EQ(back.num_words, plan.num_words) << text;
    ASSERT_EQ(back.assignments, plan.assignments) << text;
    ASSERT_EQ(gen::RenderPlan(back), text);
  }
}

TEST(PermutationProperty, FuzzIsTotalAndRepairsArePermutations) {
  std::mt19937_64 rng(106);
  const std::string alphabet = "[]0123456789 >,-ab\n";
  for (int it = 0; it < 10000; ++it) {
    const int n = Uniform(rng, 1, 20);
    std::string raw;
    const int len = Uniform(rng, 0, 60);
    for (int i = 0; i < len; ++i) raw += alphabet[static_cast<std::size_t>(Uniform(rng, 0, static_cast<int>(alphabet.size()) - 1))];
    rerank::PermutationParse parse;
    ASSERT_NO_THROW(parse = rerank::ClassifyPermutation(raw, n)) << raw;
    const auto repaired = rerank::RepairPermutation(parse, n);
    std::vector<int> sorted = repaired;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> identity(static_cast<std::size_t>(n));
    std::iota(identity.begin(), identity.end(), 1);
    ASSERT_EQ(sorted, identity) << raw;
    if (parse.outcome == rerank::PermutationOutcome::kComplete) {
      ASSERT_EQ(std::vector<std::int64_t>(repaired.begin(), repaired.end()), parse.indices) << raw;
    }
  }
}

TEST(PermutationProperty, ShuffledPermutationsAreComplete) {
  std::mt19937_64 rng(107);
  for (int it = 0; it < 500; ++it) {
    const int n = Uniform(rng, 1, 30);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::string raw;
    for (std::size_t i = 0; i < perm.size(); ++i) raw += (i ? " > [" : "[") + std::to_string(perm[i]) + "]";
    const auto parse = rerank::ClassifyPermutation(raw, n);
    ASSERT_EQ(parse.outcome, rerank::PermutationOutcome::kComplete) << raw;
    ASSERT_EQ(rerank::RepairPermutation(parse, n), perm);
  }
}

TEST(EmbeddingProperty, TopKGlobalMatchesBruteForce) {
  std::mt19937_64 rng(108);
  std::normal_distribution<double> gauss(0, 1);
  for (int it = 0; it < 1000; ++it) {
    const int dim = Uniform(rng, 2, 8);
    const int n = Uniform(rng, 1, 60);
    const int shards = Uniform(rng, 1, 5);
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    std::vector<std::vector<std::pair<std::string, std::vector<double>>>> parts(static_cast<std::size_t>(shards));
    for (int i = 0; i < n; ++i) {
      std::vector<double> v(static_cast<std::size_t>(dim));
      for (auto& x : v) x = gauss(rng);
      rows.emplace_back("v" + std::to_string(i), v);
      parts[static_cast<std::size_t>(Uniform(rng, 0, shards - 1))].emplace_back(rows.back());
    }
    std::vector<embedding::ShardIndex> built;
    for (int s = 0; s < shards; ++s) {
      if (!parts[static_cast<std::size_t>(s)].empty()) {
        built.push_back(embedding::ShardIndex::FromVectors(s, parts[static_cast<std::size_t>(s)]));
      }
    }
    std::vector<const embedding::ShardIndex*> ptrs;
    for (const auto& b : built) ptrs.push_back(&b);
    std::vector<double> q(static_cast<std::size_t>(dim));
    for (auto& x : q) x = gauss(rng);
    const int k = Uniform(rng, 1, 20);
    const auto hits = embedding::TopKGlobal(ptrs, q, k, k + Uniform(rng, 0, 5));
    const auto expect = oracle::TopK(rows, q, k);
    ASSERT_EQ(hits.size(), expect.size()) << it;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      ASSERT_EQ(hits[i].paper_id, expect[i].first) << it;
      ASSERT_NEAR(hits[i].score, expect[i].second, 1e-9) << it;
    }
  }
}

std::string RandomSentence(std::mt19937_64& rng) {
  static const std::vector<std::string> vocab{"the", "cat", "sat", "on", "mat", "a", "dog", "ran", "fast", "Cat"};
  std::string s;
  const int n = Uniform(rng, 0, 15);
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + vocab[static_cast<std::size_t>(Uniform(rng, 0, 9))];
  return s;
}

TEST(RougeProperty, MatchesOracle) {
  std::mt19937_64 rng(109);
  for (int it = 0; it < 1000; ++it) {
    const auto ref = RandomSentence(rng);
    const auto hyp = RandomSentence(rng);
    const std::pair<eval::RougeVariant, oracle::Prf> cases[] = {
        {eval::RougeVariant::k1, oracle::RougeN(ref, hyp, 1)},
        {eval::RougeVariant::k2, oracle::RougeN(ref, hyp, 2)},
        {eval::RougeVariant::kL, oracle::RougeL(ref, hyp)}};
    for (const auto& [variant, want] : cases) {
      const auto got = eval::Rouge(ref, hyp, variant);
      ASSERT_NEAR(got.precision, want.p, 1e-12) << ref << " | " << hyp;
      ASSERT_NEAR(got.recall, want.r, 1e-12) << ref << " | " << hyp;
      ASSERT_NEAR(got.f1, want.f, 1e-12) << ref << " | " << hyp;
    }
  }
}

}  // namespace
}  // namespace litrev
