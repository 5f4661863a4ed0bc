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


#include <gtest/gtest.h>

#include "litrev/error.hpp"
#include "litrev/evaluation.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace litrev::eval {
namespace {

CitationKey K(int i) { return CitationKey{i}; }

RetrievalJudgment Judgment(std::string id, std::vector<std::string> retrieved, std::set<std::string> gt) {
  return RetrievalJudgment{std::move(id), std::move(retrieved), std::move(gt)};
}

TEST(Retrieval, PrecisionUsesKAsDivisor) {
  const auto j = Judgment("q", {"a", "x", "b"}, {"a", "b", "c"});
  EXPECT_DOUBLE_EQ(PrecisionAtK(j, 1), 1.0);
  EXPECT_DOUBLE_EQ(PrecisionAtK(j, 2), 0.5);
  EXPECT_DOUBLE_EQ(PrecisionAtK(j, 10), 0.2);  // short list
  EXPECT_THROW(PrecisionAtK(j, 0), Error);
}

TEST(Retrieval, NormalizedAndClassicRecall) {
  const auto j = Judgment("q", {"a", "x", "b"}, {"a", "b", "c", "d"});
  EXPECT_DOUBLE_EQ(*NormalizedRecallAtK(j, 1), 0.5);
  EXPECT_DOUBLE_EQ(*NormalizedRecallAtK(j, 3), 1.0);
  EXPECT_DOUBLE_EQ(*ClassicRecallAtK(j, 3), 0.5);
  EXPECT_FALSE(NormalizedRecallAtK(Judgment("q", {"x"}, {"a"}), 5).has_value());
  EXPECT_FALSE(ClassicRecallAtK(Judgment("q", {"x"}, {}), 5).has_value());
  EXPECT_THROW(Judgment("q", {"a", "a"}, {"a"}).Validate(), Error);
}

TEST(Coverage, FoundMissingSpurious) {
  const auto c = ComputeCoverage("@cite_1 and @cite_3 and @cite_1 again", {K(1), K(2)});
  EXPECT_FALSE(c.covered);
  EXPECT_EQ(c.found, (std::set<CitationKey>{K(1), K(3)}));
  EXPECT_EQ(c.missing, (std::set<CitationKey>{K(2)}));
  EXPECT_EQ(c.spurious, (std::set<CitationKey>{K(3)}));
  EXPECT_TRUE(ComputeCoverage("@cite_2 then @cite_1.", {K(1), K(2)}).covered);
}

TEST(Adherence, DiffAndSummary) {
  gen::GeneratedReview r;
  r.sentences = {"a", "b", "c"};
  gen::SentencePlan p;
  p.num_sentences = 5;
  const auto a = PlanAdherence(r, p);
  EXPECT_EQ(a.diff, -2);
  EXPECT_FALSE(a.exact());
  const auto s = SummarizeAdherence({a, AdherenceRecord{3, 3, 0}, AdherenceRecord{2, 3, 1}});
  EXPECT_EQ(s.count, 3);
  EXPECT_DOUBLE_EQ(s.mean_diff, -1.0 / 3.0);
  EXPECT_EQ(s.max_abs_diff, 2);
  EXPECT_DOUBLE_EQ(s.exact_rate, 1.0 / 3.0);
}

TEST(Rouge, HandComputedValues) {
  const auto r1 = Rouge("the cat sat", "the cat ran", RougeVariant::k1);
  EXPECT_NEAR(r1.precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r1.recall, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r1.f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(Rouge("the cat sat", "the cat ran", RougeVariant::k2).f1, 0.5, 1e-12);
  EXPECT_NEAR(Rouge("the cat sat", "the cat ran", RougeVariant::kL).f1, 2.0 / 3.0, 1e-12);
  // Clipping: "the" twice in the hypothesis only matches once.
  EXPECT_NEAR(Rouge("the cat", "the the", RougeVariant::k1).precision, 0.5, 1e-12);
}

TEST(Rouge, BoundaryCases) {
  for (auto v : {RougeVariant::k1, RougeVariant::k2, RougeVariant::kL}) {
    EXPECT_DOUBLE_EQ(Rouge("Graph neural networks, again.", "graph NEURAL networks again", v).f1, 1.0);
    EXPECT_DOUBLE_EQ(Rouge("alpha beta", "gamma delta", v).f1, 0.0);
    const auto e = Rouge("", "text here", v);
    EXPECT_TRUE(e.empty_text);
    EXPECT_EQ(e.f1, 0.0);
  }
  EXPECT_EQ(RougeTokenize("It's 2-fold, e.g. X1!"), (std::vector<std::string>{"it", "s", "2", "fold", "e", "g", "x1"}));
}

TEST(Rouge, AgreesWithOracleOnSentences) {
  const std::string ref = "retrieval augmented generation improves related work drafting with ranked papers";
  const std::string hyp = "ranked papers improve drafting of related work with retrieval and generation";
  const auto o1 = oracle::RougeN(ref, hyp, 1);
  const auto o2 = oracle::RougeN(ref, hyp, 2);
  const auto ol = oracle::RougeL(ref, hyp);
  EXPECT_NEAR(Rouge(ref, hyp, RougeVariant::k1).f1, o1.f, 1e-12);
  EXPECT_NEAR(Rouge(ref, hyp, RougeVariant::k2).f1, o2.f, 1e-12);
  EXPECT_NEAR(Rouge(ref, hyp, RougeVariant::kL).f1, ol.f, 1e-12);
}

TEST(Report, AggregatesExcludeUndefinedValues) {
  const std::vector<RetrievalJudgment> js{Judgment("q1", {"a", "b"}, {"a"}), Judgment("q2", {"x", "y"}, {"z"})};
  const auto r = BuildReport(js, {}, {1, 2});
  EXPECT_DOUBLE_EQ(r.per_query.at("q1").at("precision@1"), 1.0);
  EXPECT_EQ(r.per_query.at("q2").count("normalized_recall@1"), 0u);
  const auto& nr = r.aggregates.at("normalized_recall@2");
  EXPECT_EQ(nr.count, 1);
  EXPECT_EQ(nr.excluded, 1);
  EXPECT_DOUBLE_EQ(*nr.mean, 1.0);
  const auto& p = r.aggregates.at("precision@1");
  EXPECT_DOUBLE_EQ(*p.mean, 0.5);
  EXPECT_DOUBLE_EQ(*p.stddev, 0.5);
  EXPECT_NO_THROW(r.CheckAggregates());
}

TEST(Report, ReviewsAddGenerationMetrics) {
  gen::GeneratedReview review;
  review.text = "The cat sat @cite_1. It ran.";
  review.sentences = {"The cat sat @cite_1.", "It ran."};
  gen::SentencePlan plan;
  plan.num_sentences = 2;
  plan.assignments[1] = {K(1)};
  ReviewInput in{"q1", review, {K(1)}, plan, std::string("the cat sat cite 1 it ran")};
  const auto r = BuildReport({Judgment("q1", {"a"}, {"a"})}, {in}, {1});
  const auto& m = r.per_query.at("q1");
  EXPECT_EQ(m.at("coverage"), 1.0);
  EXPECT_EQ(m.at("adherence_diff"), 0.0);
  EXPECT_EQ(m.at("adherence_exact"), 1.0);
  EXPECT_DOUBLE_EQ(m.at("rouge1_f1"), 1.0);
  EXPECT_THROW(BuildReport({Judgment("q1", {"a"}, {"a"})}, {ReviewInput{"q9", review, {}, {}, {}}}), Error);
  EXPECT_THROW(BuildReport({}), Error);
  EXPECT_THROW(BuildReport({Judgment("q", {}, {}), Judgment("q", {}, {})}), Error);
}

TEST(Report, JsonCsvAndPlotFiles) {
  const auto r = BuildReport({Judgment("q1", {"a", "b"}, {"b"})}, {}, {1, 2});
  const auto back = MetricReport::FromJson(r.ToJson());
  EXPECT_EQ(back.ToJson(), r.ToJson());
  EXPECT_EQ(r.ToJson()["schema"], MetricReport::kSchema);
  const auto csv = r.ToCsv();
  EXPECT_EQ(csv.rfind("query_id,metric,k,value\n", 0), 0u);
  EXPECT_NE(csv.find("q1,precision,2,0.500000\n"), std::string::npos);
  const auto plot = r.PlotData();
  EXPECT_EQ(plot["x"], nlohmann::json::array({1, 2}));
  EXPECT_DOUBLE_EQ(plot["series"]["normalized_recall"]["mean"][1].get<double>(), 1.0);
  testing::TempDir dir;
  r.WritePlotFiles(dir.path());
  EXPECT_EQ(testing::Slurp(dir / "precision.tsv").substr(0, 14), "k\tmean\tstddev\n");

  auto tampered = r;
  tampered.per_query["q1"]["precision@1"] = 1.0;
  EXPECT_THROW(tampered.CheckAggregates(), Error);
}

}  // namespace
}  // namespace litrev::eval
