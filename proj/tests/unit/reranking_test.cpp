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


#include <regex>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "litrev/error.hpp"
#include "litrev/reranking.hpp"
#include "litrev/synthetic_backend.hpp"
#include "test_support.hpp"

namespace litrev::rerank {
namespace {

using llm::CompletionRequest;
using ::testing::HasSubstr;

llm::GatewayOptions Quiet() {
  llm::GatewayOptions o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

CandidateSet Pool(int n) {
  CandidateSet pool;
  for (int i = 1; i <= n; ++i) {
    pool.candidates.push_back(testing::Paper("p" + std::to_string(i), "Paper " + std::to_string(i),
                                             "Sentence one of paper " + std::to_string(i) + ". Second sentence."));
  }
  return pool;
}

std::string Verdict(double p, const std::vector<std::string>& excerpts) {
  return "Reasoning here.\n```verdict\n" +
         nlohmann::json{{"arguments_for", {"a"}}, {"arguments_against", {"b"}}, {"excerpts", excerpts},
                        {"probability", p}}
             .dump() +
         "\n```";
}

TEST(Permutation, ClassifyExamples) {
  EXPECT_EQ(ClassifyPermutation("[2] > [1] > [3]", 3).outcome, PermutationOutcome::kComplete);
  EXPECT_EQ(ClassifyPermutation("[2] > [1]", 3).outcome, PermutationOutcome::kIncomplete);
  EXPECT_EQ(ClassifyPermutation("[2] > [2] > [9]", 3).outcome, PermutationOutcome::kRepeated);
  EXPECT_EQ(ClassifyPermutation("[4] > [1]", 3).outcome, PermutationOutcome::kGarbage);
  EXPECT_EQ(ClassifyPermutation("no idea", 3).outcome, PermutationOutcome::kGarbage);
  EXPECT_THROW(ClassifyPermutation("[1]", 0), Error);
}

TEST(Permutation, RepairAppendsMissingInPoolOrder) {
  EXPECT_EQ(RepairPermutation(ClassifyPermutation("[3] > [3] > [7] > [1]", 4), 4), (std::vector<int>{3, 1, 2, 4}));
}

TEST(Permutation, WholePoolInOneCall) {
  int calls = 0;
  auto backend = std::make_shared<llm::CallbackBackend>([&](const CompletionRequest& r, int) {
    ++calls;
    EXPECT_THAT(r.user_text, HasSubstr("[3] Title: Paper 3\nAbstract: Sentence one of paper 3."));
    return std::string("[3] > [1] > [2]");
  });
  llm::Gateway gw(backend, Quiet());
  const auto r = RerankPermutation(gw, Pool(3), QueryAbstract{"q", {}, "id"});
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(r.ranked.ordering, (std::vector<std::string>{"p3", "p1", "p2"}));
  EXPECT_DOUBLE_EQ(r.ranked.evidence.at("p3").score, 1.0);
  EXPECT_DOUBLE_EQ(r.ranked.evidence.at("p2").score, 1.0 / 3.0);
  EXPECT_EQ(r.WorstOutcome(), PermutationOutcome::kComplete);
  EXPECT_TRUE(r.ranked.evidence.at("p1").flags.empty());
}

TEST(Permutation, SlidingWindowMovesBestToTheFront) {
  // The model prefers higher paper numbers; the last paper must reach rank 1.
  auto backend = std::make_shared<llm::CallbackBackend>([](const CompletionRequest& r, int) {
    static const std::regex kCand(R"(\[(\d+)\] Title: Paper (\d+))");
    std::vector<std::pair<int, int>> items;  // paper number, identifier
    for (auto it = std::sregex_iterator(r.user_text.begin(), r.user_text.end(), kCand); it != std::sregex_iterator();
         ++it) {
      items.emplace_back(std::stoi((*it)[2].str()), std::stoi((*it)[1].str()));
    }
    std::sort(items.rbegin(), items.rend());
    std::string out;
    for (const auto& [_, id] : items) out += (out.empty() ? "" : " > ") + ("[" + std::to_string(id) + "]");
    return out;
  });
  llm::Gateway gw(backend, Quiet());
  PermutationConfig cfg;
  cfg.max_prompt_tokens = 10;
  cfg.window_size = 4;
  cfg.stride = 2;
  const auto r = RerankPermutation(gw, Pool(9), QueryAbstract{"q", {}, ""}, cfg);
  EXPECT_EQ(r.parses.size(), 4u);  // windows [5,9) [3,7) [1,5) [0,3)
  EXPECT_EQ(r.ranked.ordering[0], "p9");
  EXPECT_EQ(r.ranked.ordering[1], "p8");
  cfg.stride = 4;
  EXPECT_THROW(RerankPermutation(gw, Pool(9), QueryAbstract{"q", {}, ""}, cfg), Error);
}

TEST(Permutation, MalformedOutputIsRepairedAndFlagged) {
  auto backend = std::make_shared<llm::CallbackBackend>([](const CompletionRequest&, int) { return "[2] > [2]"; });
  llm::Gateway gw(backend, Quiet());
  const auto r = RerankPermutation(gw, Pool(3), QueryAbstract{"q", {}, ""});
  EXPECT_EQ(r.ranked.ordering, (std::vector<std::string>{"p2", "p1", "p3"}));
  EXPECT_EQ(r.WorstOutcome(), PermutationOutcome::kRepeated);
  EXPECT_EQ(r.ranked.evidence.at("p1").flags, std::vector<std::string>{"repaired:repeated"});
}

TEST(Verdict, ParsesFencedJsonAndFallbacks) {
  auto v = ParseDebateVerdict(Verdict(0.7, {"x"}));
  ASSERT_TRUE(v);
  EXPECT_DOUBLE_EQ(v->probability, 0.7);
  EXPECT_EQ(v->excerpts, std::vector<std::string>{"x"});

  v = ParseDebateVerdict(R"(Final: {"probability": "85%", "excerpts": "single"})");
  ASSERT_TRUE(v);
  EXPECT_DOUBLE_EQ(v->probability, 0.85);
  EXPECT_EQ(v->excerpts, std::vector<std::string>{"single"});

  v = ParseDebateVerdict("I would say the probability is 0.35 overall.");
  ASSERT_TRUE(v);
  EXPECT_DOUBLE_EQ(v->probability, 0.35);
  EXPECT_DOUBLE_EQ(ParseDebateVerdict(R"({"probability": 60})")->probability, 0.6);
  EXPECT_FALSE(ParseDebateVerdict("no verdict here"));
  EXPECT_FALSE(ParseDebateVerdict(R"({"probability": 250})"));
}

TEST(Attribution, ExcerptsMustBeContiguousAndCaseSensitive) {
  const std::string abs = "We  propose a new method.\nIt works well on graphs.";
  EXPECT_TRUE(VerifyAttribution({"We propose a new method."}, abs));
  EXPECT_TRUE(VerifyAttribution({"\"It works well\""}, abs));
  EXPECT_FALSE(VerifyAttribution({"we propose a new method."}, abs));
  EXPECT_FALSE(VerifyAttribution({"a new method. It works great"}, abs));
  EXPECT_TRUE(VerifyAttribution({}, abs));
  EXPECT_EQ(NormalizeExcerpt("  \xE2\x80\x9C quoted   text \xE2\x80\x9D "), "quoted text");
}

TEST(Debate, RepromptsUntilExcerptsVerify) {
  const auto pool = Pool(1);
  auto backend = std::make_shared<llm::CallbackBackend>([](const CompletionRequest& r, int n) {
    if (n == 1) return Verdict(0.9, {"An invented sentence."});
    EXPECT_THAT(r.user_text, HasSubstr("do not appear verbatim"));
    EXPECT_THAT(r.user_text, HasSubstr("- An invented sentence."));
    return Verdict(0.8, {"Sentence one of paper 1."});
  });
  llm::Gateway gw(backend, Quiet());
  const auto ev = DebateRankOne(gw, pool.candidates[0], QueryAbstract{"q", {}, ""}, DebateConfig{});
  EXPECT_TRUE(ev.verified);
  EXPECT_EQ(ev.attempts, 2);
  EXPECT_DOUBLE_EQ(ev.score, 0.8);
  EXPECT_EQ(ev.excerpts, std::vector<std::string>{"Sentence one of paper 1."});
}

TEST(Debate, UnverifiedAfterRetriesKeepsOnlyRealExcerpts) {
  const auto pool = Pool(1);
  auto backend = std::make_shared<llm::CallbackBackend>(
      [](const CompletionRequest&, int) { return Verdict(0.6, {"Second sentence.", "Made up."}); });
  llm::Gateway gw(backend, Quiet());
  DebateConfig cfg;
  cfg.max_attribution_retries = 1;
  const auto ev = DebateRankOne(gw, pool.candidates[0], QueryAbstract{"q", {}, ""}, cfg);
  EXPECT_FALSE(ev.verified);
  EXPECT_EQ(ev.attempts, 2);
  EXPECT_EQ(ev.excerpts, std::vector<std::string>{"Second sentence."});
  EXPECT_EQ(ev.flags, (std::vector<std::string>{"unverified", "rejected_excerpts:1"}));
}

TEST(Debate, VerificationDisabledKeepsEverything) {
  const auto pool = Pool(1);
  auto backend =
      std::make_shared<llm::CallbackBackend>([](const CompletionRequest&, int) { return Verdict(0.6, {"Made up."}); });
  llm::Gateway gw(backend, Quiet());
  DebateConfig cfg;
  cfg.verify_attribution = false;
  const auto ev = DebateRankOne(gw, pool.candidates[0], QueryAbstract{"q", {}, ""}, cfg);
  EXPECT_EQ(ev.attempts, 1);
  EXPECT_EQ(ev.excerpts, std::vector<std::string>{"Made up."});
  EXPECT_EQ(ev.flags, std::vector<std::string>{"verification_disabled"});
}

TEST(Debate, UnparseableVerdictScoresZero) {
  const auto pool = Pool(1);
  auto backend = std::make_shared<llm::CallbackBackend>([](const CompletionRequest&, int) { return "hmm"; });
  llm::Gateway gw(backend, Quiet());
  const auto ev = DebateRankOne(gw, pool.candidates[0], QueryAbstract{"q", {}, ""}, DebateConfig{});
  EXPECT_EQ(ev.attempts, 3);
  EXPECT_EQ(ev.score, 0.0);
  EXPECT_EQ(ev.flags, std::vector<std::string>{"unparseable_verdict"});
}

TEST(Debate, DemoteToTailAndKeepWithFlag) {
  std::map<std::string, RankEvidence> ev;
  ev["a"].score = 0.9;
  ev["b"].score = 0.5;
  ev["b"].verified = true;
  ev["c"].score = 0.5;
  ev["c"].verified = true;
  EXPECT_EQ(OrderByEvidence(ev, UnverifiedPolicy::kDemoteToTail), (std::vector<std::string>{"b", "c", "a"}));
  EXPECT_EQ(OrderByEvidence(ev, UnverifiedPolicy::kKeepWithFlag), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(ParseUnverifiedPolicy(ToString(UnverifiedPolicy::kKeepWithFlag)), UnverifiedPolicy::kKeepWithFlag);
}

TEST(Debate, ParallelRunMatchesSequential) {
  auto pool = Pool(12);
  const QueryAbstract q{"Sentence paper", {}, "id"};
  DebateConfig cfg;
  llm::Gateway seq(std::make_shared<llm::SyntheticBackend>(), Quiet());
  const auto a = RerankDebate(seq, pool, q, cfg);
  cfg.parallelism = 4;
  llm::Gateway par(std::make_shared<llm::SyntheticBackend>(), Quiet());
  const auto b = RerankDebate(par, pool, q, cfg);
  EXPECT_EQ(a.ordering, b.ordering);
  EXPECT_EQ(nlohmann::json(a), nlohmann::json(b));
  EXPECT_TRUE(a.evidence.at("p1").verified);
  cfg.max_attribution_retries = 6;
  EXPECT_THROW(RerankDebate(par, pool, q, cfg), Error);
}

TEST(Debate, ProviderFailureIsContainedPerCandidate) {
  auto pool = Pool(2);
  auto backend = std::make_shared<llm::CallbackBackend>([](const CompletionRequest& r, int) -> std::string {
    if (r.user_text.find("Paper 1") != std::string::npos) throw Error(ErrorCode::kProviderUnavailable, "down");
    return Verdict(0.4, {"Second sentence."});
  });
  llm::Gateway gw(backend, Quiet());
  const auto r = RerankDebate(gw, pool, QueryAbstract{"q", {}, ""}, DebateConfig{});
  EXPECT_EQ(r.ordering, (std::vector<std::string>{"p2", "p1"}));
  EXPECT_EQ(r.evidence.at("p1").flags, std::vector<std::string>{"provider_unavailable"});
}

}  // namespace
}  // namespace litrev::rerank
