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

#include "litrev/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "litrev/error.hpp"

namespace litrev::eval {

void RetrievalJudgment::Validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& id : retrieved) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate id '" + id + "' in retrieved list of " + query_id);
    }
  }
}

namespace {

std::size_t HitsInTop(const RetrievalJudgment& j, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  const auto limit = std::min<std::size_t>(static_cast<std::size_t>(k), j.retrieved.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < limit; ++i) hits += j.ground_truth.count(j.retrieved[i]);
  return hits;
}

std::size_t RelevantRetrieved(const RetrievalJudgment& j) {
  std::size_t n = 0;
  for (const auto& id : j.retrieved) n += j.ground_truth.count(id);
  return n;
}

}  // namespace

double PrecisionAtK(const RetrievalJudgment& j, int k) {
  return static_cast<double>(HitsInTop(j, k)) / static_cast<double>(k);
}

std::optional<double> NormalizedRecallAtK(const RetrievalJudgment& j, int k) {
  const auto hits = HitsInTop(j, k);
  const auto relevant = RelevantRetrieved(j);
  if (relevant == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(relevant);
}

std::optional<double> ClassicRecallAtK(const RetrievalJudgment& j, int k) {
  const auto hits = HitsInTop(j, k);
  if (j.ground_truth.empty()) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(j.ground_truth.size());
}

Coverage ComputeCoverage(std::string_view text, const std::set<CitationKey>& gt_keys) {
  Coverage c;
  c.found = DistinctKeys(ExtractCitationKeys(text));
  std::set_difference(gt_keys.begin(), gt_keys.end(), c.found.begin(), c.found.end(),
                      std::inserter(c.missing, c.missing.end()));
  std::set_difference(c.found.begin(), c.found.end(), gt_keys.begin(), gt_keys.end(),
                      std::inserter(c.spurious, c.spurious.end()));
  c.covered = c.found == gt_keys;
  return c;
}

AdherenceRecord PlanAdherence(const gen::GeneratedReview& review, const gen::SentencePlan& plan) {
  AdherenceRecord r;
  r.planned_lines = plan.num_sentences;
  r.generated_lines = static_cast<int>(review.sentences.size());
  r.diff = r.generated_lines - r.planned_lines;
  return r;
}

AdherenceSummary SummarizeAdherence(const std::vector<AdherenceRecord>& records) {
  AdherenceSummary s;
  s.count = static_cast<int>(records.size());
  if (records.empty()) return s;
  long sum = 0;
  int exact = 0;
  for (const auto& r : records) {
    sum += r.diff;
    s.max_abs_diff = std::max(s.max_abs_diff, std::abs(r.diff));
    exact += r.exact() ? 1 : 0;
  }
  s.mean_diff = static_cast<double>(sum) / s.count;
  s.exact_rate = static_cast<double>(exact) / s.count;
  return s;
}

std::string_view ToString(RougeVariant v) {
  switch (v) {
    case RougeVariant::k1:
      return "rouge1";
    case RougeVariant::k2:
      return "rouge2";
    case RougeVariant::kL:
      return "rougeL";
  }
  return "rouge1";
}

std::vector<std::string> RougeTokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

RougeScore FromCounts(std::size_t overlap, std::size_t hyp_total, std::size_t ref_total) {
  RougeScore s;
  s.precision = hyp_total ? static_cast<double>(overlap) / static_cast<double>(hyp_total) : 0.0;
  s.recall = ref_total ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::map<std::vector<std::string>, std::size_t> NGrams(const std::vector<std::string>& toks, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++out[std::vector<std::string>(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + n))];
  }
  return out;
}

std::size_t Lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

RougeScore Rouge(std::string_view reference, std::string_view hypothesis, RougeVariant variant) {
  const auto ref = RougeTokenize(reference);
  const auto hyp = RougeTokenize(hypothesis);
  if (ref.empty() || hyp.empty()) {
    RougeScore s;
    s.empty_text = true;
    return s;
  }
  if (variant == RougeVariant::kL) return FromCounts(Lcs(ref, hyp), hyp.size(), ref.size());

  const std::size_t n = variant == RougeVariant::k1 ? 1 : 2;
  const auto ref_grams = NGrams(ref, n);
  const auto hyp_grams = NGrams(hyp, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : hyp_grams) {
    if (auto it = ref_grams.find(gram); it != ref_grams.end()) overlap += std::min(count, it->second);
  }
  const auto total = [](const auto& grams) {
    std::size_t t = 0;
    for (const auto& [_, c] : grams) t += c;
    return t;
  };
  return FromCounts(overlap, total(hyp_grams), total(ref_grams));
}

std::vector<int> DefaultKGrid() { return {1, 5, 10, 20, 40, 60, 80, 100}; }

namespace {

MetricAggregate Aggregate(const std::vector<double>& values, int domain) {
  MetricAggregate a;
  a.count = static_cast<int>(values.size());
  a.excluded = domain - a.count;
  if (values.empty()) return a;
  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - mean) * (v - mean);
  a.mean = mean;
  a.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return a;
}

std::map<std::string, std::vector<double>> Collect(const MetricReport& r) {
  std::map<std::string, std::vector<double>> by_metric;
  for (const auto& [qid, metrics] : r.per_query) {
    for (const auto& [name, v] : metrics) by_metric[name].push_back(v);
  }
  return by_metric;
}

nlohmann::json OptionalJson(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::string FormatValue(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

MetricReport BuildReport(const std::vector<RetrievalJudgment>& judgments, const std::vector<ReviewInput>& reviews,
                         std::vector<int> k_grid) {
  if (judgments.empty()) throw Error(ErrorCode::kAlignmentError, "no retrieval judgments to report on");
  for (int k : k_grid) {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k_grid values must be at least 1");
  }
  std::sort(k_grid.begin(), k_grid.end());
  k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());

  MetricReport report;
  report.k_grid = k_grid;
  std::map<std::string, int> domain;

  for (const auto& j : judgments) {
    j.Validate();
    if (report.per_query.count(j.query_id)) {
      throw Error(ErrorCode::kAlignmentError, "query id '" + j.query_id + "' appears twice");
    }
    auto& m = report.per_query[j.query_id];
    for (int k : k_grid) {
      const auto suffix = "@" + std::to_string(k);
      m["precision" + suffix] = PrecisionAtK(j, k);
      if (auto v = NormalizedRecallAtK(j, k)) m["normalized_recall" + suffix] = *v;
      if (auto v = ClassicRecallAtK(j, k)) m["classic_recall" + suffix] = *v;
      for (const char* name : {"precision", "normalized_recall", "classic_recall"}) ++domain[name + suffix];
    }
  }

  std::set<std::string> reviewed;
  for (const auto& r : reviews) {
    auto it = report.per_query.find(r.query_id);
    if (it == report.per_query.end()) {
      throw Error(ErrorCode::kAlignmentError, "review for '" + r.query_id + "' has no retrieval judgment");
    }
    if (!reviewed.insert(r.query_id).second) {
      throw Error(ErrorCode::kAlignmentError, "review for '" + r.query_id + "' appears twice");
    }
    auto& m = it->second;
    const auto cov = ComputeCoverage(r.review.text, r.gt_keys);
    m["coverage"] = cov.covered ? 1.0 : 0.0;
    m["spurious_keys"] = static_cast<double>(cov.spurious.size());
    ++domain["coverage"];
    ++domain["spurious_keys"];
    if (r.plan) {
      const auto adh = PlanAdherence(r.review, *r.plan);
      m["adherence_diff"] = adh.diff;
      m["adherence_exact"] = adh.exact() ? 1.0 : 0.0;
    }
    ++domain["adherence_diff"];
    ++domain["adherence_exact"];
    for (auto v : {RougeVariant::k1, RougeVariant::k2, RougeVariant::kL}) {
      const auto name = std::string(ToString(v)) + "_f1";
      ++domain[name];
      if (r.reference_text) m[name] = Rouge(*r.reference_text, r.review.text, v).f1;
    }
  }

  const auto by_metric = Collect(report);
  for (const auto& [name, dom] : domain) {
    auto it = by_metric.find(name);
    report.aggregates[name] = Aggregate(it == by_metric.end() ? std::vector<double>{} : it->second, dom);
  }
  return report;
}

void MetricReport::CheckAggregates() const {
  const auto by_metric = Collect(*this);
  for (const auto& [name, agg] : aggregates) {
    auto it = by_metric.find(name);
    const auto recomputed =
        Aggregate(it == by_metric.end() ? std::vector<double>{} : it->second, agg.count + agg.excluded);
    const auto close = [](const std::optional<double>& a, const std::optional<double>& b) {
      if (a.has_value() != b.has_value()) return false;
      return !a || std::abs(*a - *b) <= 1e-12;
    };
    if (recomputed.count != agg.count || !close(recomputed.mean, agg.mean) || !close(recomputed.stddev, agg.stddev)) {
      throw Error(ErrorCode::kInvalidArgument, "aggregate for '" + name + "' does not match per-query values");
    }
  }
  for (const auto& [name, _] : by_metric) {
    if (!aggregates.count(name)) throw Error(ErrorCode::kInvalidArgument, "metric '" + name + "' has no aggregate");
  }
}

nlohmann::json MetricReport::ToJson() const {
  nlohmann::json aggs = nlohmann::json::object();
  for (const auto& [name, a] : aggregates) {
    aggs[name] = {{"count", a.count}, {"excluded", a.excluded}, {"mean", OptionalJson(a.mean)},
                  {"stddev", OptionalJson(a.stddev)}};
  }
  return {{"schema", kSchema}, {"k_grid", k_grid}, {"per_query", per_query}, {"aggregates", aggs}};
}

MetricReport MetricReport::FromJson(const nlohmann::json& j) {
  if (j.value("schema", "") != kSchema) throw Error(ErrorCode::kInvalidArgument, "unsupported report schema");
  MetricReport r;
  r.k_grid = j.at("k_grid").get<std::vector<int>>();
  r.per_query = j.at("per_query").get<std::map<std::string, std::map<std::string, double>>>();
  for (const auto& [name, a] : j.at("aggregates").items()) {
    MetricAggregate agg;
    agg.count = a.at("count").get<int>();
    agg.excluded = a.at("excluded").get<int>();
    if (!a.at("mean").is_null()) agg.mean = a.at("mean").get<double>();
    if (!a.at("stddev").is_null()) agg.stddev = a.at("stddev").get<double>();
    r.aggregates[name] = agg;
  }
  return r;
}

std::string MetricReport::ToCsv() const {
  std::string out = "query_id,metric,k,value\n";
  for (const auto& [qid, metrics] : per_query) {
    for (const auto& [name, v] : metrics) {
      const auto at = name.find('@');
      const auto metric = name.substr(0, at);
      const auto k = at == std::string::npos ? std::string() : name.substr(at + 1);
      out += qid + "," + metric + "," + k + "," + FormatValue(v) + "\n";
    }
  }
  return out;
}

nlohmann::json MetricReport::PlotData() const {
  nlohmann::json series = nlohmann::json::object();
  for (const char* metric : {"precision", "normalized_recall"}) {
    auto mean = nlohmann::json::array();
    auto stddev = nlohmann::json::array();
    for (int k : k_grid) {
      auto it = aggregates.find(std::string(metric) + "@" + std::to_string(k));
      mean.push_back(it == aggregates.end() ? nlohmann::json() : OptionalJson(it->second.mean));
      stddev.push_back(it == aggregates.end() ? nlohmann::json() : OptionalJson(it->second.stddev));
    }
    series[metric] = {{"mean", mean}, {"stddev", stddev}};
  }
  return {{"x", k_grid}, {"x_label", "k"}, {"series", series}};
}

void MetricReport::WritePlotFiles(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const char* metric : {"precision", "normalized_recall"}) {
    std::ofstream f(dir / (std::string(metric) + ".tsv"));
    if (!f) throw Error(ErrorCode::kIo, "cannot write plot data in " + dir.string());
    f << "k\tmean\tstddev\n";
    for (int k : k_grid) {
      auto it = aggregates.find(std::string(metric) + "@" + std::to_string(k));
      f << k << '\t';
      if (it != aggregates.end() && it->second.mean) {
        f << FormatValue(*it->second.mean) << '\t' << FormatValue(*it->second.stddev);
      } else {
        f << "nan\tnan";
      }
      f << '\n';
    }
  }
}

}  // namespace litrev::eval
