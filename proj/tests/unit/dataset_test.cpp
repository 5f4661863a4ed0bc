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

#include "litrev/dataset_builder.hpp"
#include "litrev/error.hpp"
#include "test_support.hpp"

namespace litrev::dataset {
namespace {

using nlohmann::json;

BuildResult BuildGolden(BuildOptions opts = {}) {
  if (opts.month_tag.empty()) opts.month_tag = "2308";
  const auto corpus = CitationCorpus::Load(testing::Fixture("dataset/corpus.ndjson"));
  return BuildEvalSetFromFile(testing::Fixture("dataset/raw_papers.ndjson"), corpus, opts);
}

std::string Line(const std::string& id, const std::string& arxiv, const std::string& citations = R"(["c1"])") {
  return R"({"id": ")" + id + R"(", "external_ids": {"arxiv": ")" + arxiv +
         R"("}, "title": "t", "abstract": "a", "publication_date": "2023-08-01", "body": "Intro text. Related text.",)"
         R"( "sections": [{"title": "Intro", "start": 0, "end": 11}, {"title": "Related Work", "start": 12, "end": 25}],)"
         R"( "citations": )" +
         citations + "}";
}

TEST(SectionTitles, SynonymsAfterNormalization) {
  EXPECT_EQ(NormalizeSectionTitle("  2.1  Related   Work: "), "related work");
  EXPECT_EQ(NormalizeSectionTitle("IV. Background."), "background");
  EXPECT_EQ(NormalizeSectionTitle("A) Literature Review"), "literature review");
  EXPECT_TRUE(IsRelatedWorkTitle("2. Related Work"));
  EXPECT_TRUE(IsRelatedWorkTitle("RELATED WORKS"));
  EXPECT_TRUE(IsRelatedWorkTitle("Background"));
  EXPECT_FALSE(IsRelatedWorkTitle("Backgrounds and Motivation"));
  EXPECT_FALSE(IsRelatedWorkTitle("Related Work and Discussion"));
  EXPECT_FALSE(IsRelatedWorkTitle("Introduction"));
}

TEST(SectionTitles, FirstMatchingSpanWins) {
  const std::vector<SectionSpan> s{{"Intro", 0, 5}, {"Background", 5, 10}, {"Related Work", 10, 15}};
  EXPECT_EQ(FindRelatedWorkSpan("0123456789abcde", s)->start, 5u);
  EXPECT_FALSE(FindRelatedWorkSpan("x", {{"Intro", 0, 1}}).has_value());
}

TEST(Month, AnchoredPrefix) {
  RawPaper p;
  p.external_ids["arxiv"] = "2308.01234";
  EXPECT_TRUE(MatchesMonth(p, "2308"));
  p.external_ids["arxiv"] = "12308.1";
  EXPECT_FALSE(MatchesMonth(p, "2308"));
  p.external_ids.clear();
  EXPECT_FALSE(MatchesMonth(p, "2308"));
  EXPECT_THROW(MatchesMonth(p, "23-8"), Error);
  EXPECT_THROW(MatchesMonth(p, "202308"), Error);
}

TEST(RawPaper, RejectsBadRecords) {
  EXPECT_THROW(RawPaper::FromJson(json::array()), Error);
  EXPECT_THROW(RawPaper::FromJson(json{{"title", "no id"}}), Error);
  auto j = json::parse(Line("p", "2308.1"));
  j["sections"][0]["end"] = 500;
  EXPECT_THROW(RawPaper::FromJson(j), Error);
  j = json::parse(Line("p", "2308.1"));
  j["publication_date"] = "soon";
  EXPECT_THROW(RawPaper::FromJson(j), Error);
  EXPECT_EQ(RawPaper::FromJson(json::parse(Line("p", "2308.1"))).ArxivId(), "2308.1");
}

TEST(Builder, GoldenFixture) {
  const auto r = BuildGolden();
  EXPECT_EQ(r.input_count, 10u);
  ASSERT_EQ(r.examples.size(), 6u);
  ASSERT_EQ(r.drops.size(), 4u);
  std::vector<std::string> ids;
  for (const auto& e : r.examples) ids.push_back(e.query.source_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"p01", "p02", "p04", "p06", "p08", "p10"}));
  const std::map<std::string, std::size_t> expected{
      {"month_mismatch", 1}, {"no_related_work", 1}, {"unresolved_citation", 1}, {"citation_after_query", 1}};
  EXPECT_EQ(r.DropCounts(), expected);
  EXPECT_EQ(r.drops[0].paper_id, "p03");
  EXPECT_EQ(r.drops[0].line, 3u);

  const auto& p02 = r.examples[1];
  EXPECT_EQ(p02.span.title, "2. Related Work");
  EXPECT_EQ(p02.gt_related_work, "Prior systems retrieve papers by keyword and rerank them.");
  EXPECT_EQ(p02.gt_citations.size(), 3u);
  EXPECT_EQ(p02.gt_citations[0].paper_id, "c02");
  ASSERT_TRUE(p02.context.has_value());
  EXPECT_EQ(p02.context->find("Prior systems"), std::string::npos);
  EXPECT_EQ(FormatDate(*p02.query.publication_date), "2023-08-03");
}

TEST(Builder, StatsAreByteStable) {
  const auto a = ComputeStats(BuildGolden()).Serialize();
  const auto b = ComputeStats(BuildGolden()).Serialize();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, testing::Slurp(testing::Fixture("dataset/expected_stats.json")));
  EXPECT_THROW(ComputeStats(std::vector<EvalExample>{}), Error);
}

TEST(Builder, AccountingCoversEveryReason) {
  CitationCorpus corpus;
  corpus.Add(testing::Paper("c1", "t", "cited", "2020-01-01"));
  corpus.Add(testing::Paper("c-empty", "t", " ", "2020-01-01"));
  std::vector<std::string> lines{
      Line("ok", "2308.1"),
      "{not json",
      Line("dup", "2308.1"),
      "",
      R"({"id": "noabs", "external_ids": {"arxiv": "2308.3"}, "abstract": "", "body": "b", "publication_date": "2023-08-01"})",
      R"({"id": "nodate", "external_ids": {"arxiv": "2308.4"}, "abstract": "a", "body": "b"})",
      R"({"id": "empty-rw", "external_ids": {"arxiv": "2308.5"}, "abstract": "a", "publication_date": "2023-08-01",)"
      R"( "body": "Intro.    ", "sections": [{"title": "Related Work", "start": 6, "end": 10}], "citations": ["c1"]})",
      R"({"id": "all-rw", "external_ids": {"arxiv": "2308.6"}, "abstract": "a", "publication_date": "2023-08-01",)"
      R"( "body": "Only related.", "sections": [{"title": "Related Work", "start": 0, "end": 13}], "citations": ["c1"]})",
      Line("nocite", "2308.7", "[]"),
      Line("noabs-cite", "2308.8", R"(["c1", "c-empty"])"),
  };
  BuildOptions opts;
  opts.month_tag = "2308";
  int probes = 0;
  opts.probe = [&](const QueryAbstract&) {
    ++probes;
    return std::size_t{12};
  };
  opts.pool_target = 50;
  const auto r = BuildEvalSet(lines, corpus, opts);
  EXPECT_EQ(r.input_count, lines.size() - 1);
  EXPECT_EQ(r.examples.size() + r.drops.size() + r.sampled_out, r.input_count);
  const std::map<std::string, std::size_t> expected{
      {"malformed_record", 2}, {"duplicate_id", 1},  {"missing_abstract", 1}, {"empty_related_work", 1},
      {"empty_context", 1},    {"no_citations", 1},  {"unresolved_citation", 1}, {"infeasible_pool", 1}};
  EXPECT_EQ(r.DropCounts(), expected);
  EXPECT_EQ(probes, 1);
}

TEST(Builder, SeededSampleIsReproducible) {
  BuildOptions opts;
  opts.sample = 3;
  opts.seed = 42;
  const auto a = BuildGolden(opts);
  const auto b = BuildGolden(opts);
  ASSERT_EQ(a.examples.size(), 3u);
  EXPECT_EQ(a.sampled_out, 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.examples[i].query.source_id, b.examples[i].query.source_id);
  EXPECT_TRUE(std::is_sorted(a.examples.begin(), a.examples.end(), [](const auto& x, const auto& y) {
    return x.query.source_id < y.query.source_id;
  }));
}

TEST(Examples, WriteReadRoundTrip) {
  testing::TempDir dir;
  const auto r = BuildGolden();
  WriteExamples(dir / "ex.ndjson", r.examples);
  const auto back = ReadExamples(dir / "ex.ndjson");
  ASSERT_EQ(back.size(), r.examples.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(json(back[i]), json(r.examples[i]));
  testing::Spit(dir / "bad.ndjson", "{\"query\": 1}\n");
  EXPECT_THROW(ReadExamples(dir / "bad.ndjson"), Error);
}

}  // namespace
}  // namespace litrev::dataset
