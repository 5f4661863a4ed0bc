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

#include "litrev/dataset_builder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <variant>

#include "litrev/error.hpp"
#include "litrev/text.hpp"

namespace litrev::dataset {

using nlohmann::json;

namespace {

[[noreturn]] void Ingest(const std::string& msg) { throw Error(ErrorCode::kIngestError, msg); }

std::string IdString(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  Ingest("identifier must be a string or integer");
}

std::string StringField(const json& j, const char* key, bool required) {
  if (!j.contains(key) || j[key].is_null()) {
    if (required) Ingest(std::string("missing field '") + key + "'");
    return {};
  }
  if (!j[key].is_string()) Ingest(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

}  // namespace

RawPaper RawPaper::FromJson(const json& j) {
  if (!j.is_object()) Ingest("record is not a JSON object");
  RawPaper p;
  if (!j.contains("id")) Ingest("missing field 'id'");
  p.id = IdString(j["id"]);
  if (j.contains("external_ids") && j["external_ids"].is_object()) {
    for (const auto& [k, v] : j["external_ids"].items()) {
      if (!v.is_null()) p.external_ids[text::ToLower(k)] = IdString(v);
    }
  }
  p.title = StringField(j, "title", false);
  p.abstract = StringField(j, "abstract", false);
  p.body = StringField(j, "body", true);
  const auto date = StringField(j, "publication_date", false);
  if (!date.empty()) {
    p.publication_date = TryParseDate(date);
    if (!p.publication_date) Ingest("unparseable publication_date '" + date + "'");
  }
  if (j.contains("sections")) {
    if (!j["sections"].is_array()) Ingest("'sections' must be an array");
    for (const auto& s : j["sections"]) {
      if (!s.is_object() || !s.contains("start") || !s.contains("end") || !s["start"].is_number_unsigned() ||
          !s["end"].is_number_unsigned()) {
        Ingest("section needs non-negative integer 'start' and 'end'");
      }
      SectionSpan span{StringField(s, "title", false), s["start"].get<std::size_t>(), s["end"].get<std::size_t>()};
      if (span.start >= span.end || span.end > p.body.size()) {
        Ingest("section '" + span.title + "' has span [" + std::to_string(span.start) + ", " +
               std::to_string(span.end) + ") outside the body");
      }
      p.sections.push_back(std::move(span));
    }
  }
  if (j.contains("citations")) {
    if (!j["citations"].is_array()) Ingest("'citations' must be an array");
    for (const auto& c : j["citations"]) p.citations.push_back(IdString(c));
  }
  return p;
}

std::string RawPaper::ArxivId() const {
  auto it = external_ids.find("arxiv");
  return it == external_ids.end() ? std::string() : it->second;
}

std::string NormalizeSectionTitle(std::string_view title) {
  static const std::regex kNumbering(R"(^(?:(?:\d+|[ivxlc]+|[a-z])(?:\.\d+)*[.)]?\s+))");
  std::string s(text::Trim(text::CollapseWhitespace(text::ToLower(title))));
  s = std::regex_replace(s, kNumbering, "", std::regex_constants::format_first_only);
  while (!s.empty() && (s.back() == ':' || s.back() == '.')) s.pop_back();
  return std::string(text::Trim(s));
}

bool IsRelatedWorkTitle(std::string_view title) {
  static const std::set<std::string> kSynonyms = {"related work", "related works", "literature review",
                                                  "background"};
  return kSynonyms.count(NormalizeSectionTitle(title)) > 0;
}

std::optional<SectionSpan> FindRelatedWorkSpan(std::string_view doc, const std::vector<SectionSpan>& sections) {
  for (const auto& s : sections) {
    if (s.start >= s.end || s.end > doc.size()) continue;
    if (IsRelatedWorkTitle(s.title)) return s;
  }
  return std::nullopt;
}

bool MatchesMonth(const RawPaper& paper, std::string_view month_tag) {
  static const std::regex kTag(R"(\d{4})");
  if (!std::regex_match(std::string(month_tag), kTag)) {
    throw Error(ErrorCode::kInvalidArgument, "month tag must be YYMM, got '" + std::string(month_tag) + "'");
  }
  return text::StartsWith(paper.ArxivId(), month_tag);
}

std::vector<RawPaper> FilterMonth(const std::vector<RawPaper>& papers, std::string_view month_tag) {
  std::vector<RawPaper> out;
  for (const auto& p : papers) {
    if (MatchesMonth(p, month_tag)) out.push_back(p);
  }
  return out;
}

void to_json(json& j, const EvalExample& e) {
  j = json{{"query", e.query},
           {"title", e.title},
           {"gt_related_work", e.gt_related_work},
           {"gt_citations", e.gt_citations},
           {"context", e.context ? json(*e.context) : json()},
           {"span", {{"title", e.span.title}, {"start", e.span.start}, {"end", e.span.end}}}};
}

void from_json(const json& j, EvalExample& e) {
  e.query = j.at("query").get<QueryAbstract>();
  e.title = j.value("title", "");
  e.gt_related_work = j.at("gt_related_work").get<std::string>();
  e.gt_citations = j.at("gt_citations").get<std::vector<PaperRecord>>();
  e.context.reset();
  if (j.contains("context") && j["context"].is_string()) e.context = j["context"].get<std::string>();
  if (j.contains("span")) {
    const auto& s = j["span"];
    e.span = SectionSpan{s.value("title", ""), s.value("start", std::size_t{0}), s.value("end", std::size_t{0})};
  }
}

std::string_view ToString(DropReason r) {
  switch (r) {
    case DropReason::kMalformedRecord: return "malformed_record";
    case DropReason::kMonthMismatch: return "month_mismatch";
    case DropReason::kDuplicateId: return "duplicate_id";
    case DropReason::kMissingAbstract: return "missing_abstract";
    case DropReason::kNoRelatedWork: return "no_related_work";
    case DropReason::kEmptyRelatedWork: return "empty_related_work";
    case DropReason::kEmptyContext: return "empty_context";
    case DropReason::kNoCitations: return "no_citations";
    case DropReason::kUnresolvedCitation: return "unresolved_citation";
    case DropReason::kCitationAfterQuery: return "citation_after_query";
    case DropReason::kInfeasiblePool: return "infeasible_pool";
  }
  return "malformed_record";
}

CitationCorpus CitationCorpus::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open citation corpus " + path.string());
  CitationCorpus corpus;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::Trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kIngestError, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    PaperRecord rec;
    for (const char* key : {"paper_id", "corpusid", "id"}) {
      if (j.contains(key)) {
        rec.paper_id = IdString(j[key]);
        break;
      }
    }
    if (rec.paper_id.empty()) Ingest(path.string() + ":" + std::to_string(n) + ": record has no id");
    rec.title = j.value("title", "");
    if (j.contains("abstract") && j["abstract"].is_string()) rec.abstract = j["abstract"].get<std::string>();
    if (j.contains("publication_date") && j["publication_date"].is_string()) {
      if (auto d = TryParseDate(j["publication_date"].get<std::string>())) rec.publication_date = *d;
    }
    corpus.Add(std::move(rec));
  }
  return corpus;
}

void CitationCorpus::Add(PaperRecord record) {
  auto id = record.paper_id;
  records_.insert_or_assign(std::move(id), std::move(record));
}

const PaperRecord* CitationCorpus::Find(const std::string& id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

std::map<std::string, std::size_t> BuildResult::DropCounts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& d : drops) ++out[std::string(ToString(d.reason))];
  return out;
}

namespace {

struct Rejection {
  DropReason reason;
  std::string detail;
};

// Either an example or the reason it was rejected.
std::variant<EvalExample, Rejection> Process(const RawPaper& p, const CitationCorpus& corpus,
                                             const BuildOptions& opts) {
  if (text::Trim(p.abstract).empty()) return Rejection{DropReason::kMissingAbstract, "abstract is empty"};
  if (!p.publication_date) return Rejection{DropReason::kMalformedRecord, "publication_date is missing"};
  const auto span = FindRelatedWorkSpan(p.body, p.sections);
  if (!span) return Rejection{DropReason::kNoRelatedWork, "no section title matches a related-work synonym"};

  EvalExample ex;
  ex.span = *span;
  ex.title = p.title;
  ex.gt_related_work = p.body.substr(span->start, span->end - span->start);
  if (text::Trim(ex.gt_related_work).empty()) return Rejection{DropReason::kEmptyRelatedWork, "section is blank"};
  const auto context = p.body.substr(0, span->start) + p.body.substr(span->end);
  if (text::Trim(context).empty()) {
    return Rejection{DropReason::kEmptyContext, "related-work section covers the whole body"};
  }
  ex.context = context;

  std::set<std::string> cited(p.citations.begin(), p.citations.end());
  if (cited.empty()) return Rejection{DropReason::kNoCitations, "citation list is empty"};
  for (const auto& id : cited) {
    const auto* rec = corpus.Find(id);
    if (rec == nullptr) return Rejection{DropReason::kUnresolvedCitation, "cited paper " + id + " is not in the corpus"};
    if (text::Trim(rec->abstract).empty()) {
      return Rejection{DropReason::kUnresolvedCitation, "cited paper " + id + " has no abstract"};
    }
    if (rec->publication_date > *p.publication_date) {
      return Rejection{DropReason::kCitationAfterQuery, "cited paper " + id + " is dated after the query"};
    }
    ex.gt_citations.push_back(*rec);
  }

  ex.query = QueryAbstract{p.abstract, p.publication_date, p.id};
  if (opts.probe) {
    const auto reachable = opts.probe(ex.query);
    if (reachable < opts.pool_target) {
      return Rejection{DropReason::kInfeasiblePool, "pool reached " + std::to_string(reachable) + " of " +
                                                        std::to_string(opts.pool_target)};
    }
  }
  return ex;
}

}  // namespace

BuildResult BuildEvalSet(const std::vector<std::string>& lines, const CitationCorpus& corpus,
                         const BuildOptions& opts) {
  BuildResult result;
  std::set<std::string> seen_arxiv;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::Trim(lines[i]).empty()) continue;
    ++result.input_count;
    DroppedRecord drop;
    drop.line = i + 1;
    RawPaper paper;
    try {
      paper = RawPaper::FromJson(json::parse(lines[i]));
    } catch (const json::parse_error& e) {
      drop.reason = DropReason::kMalformedRecord;
      drop.detail = e.what();
      result.drops.push_back(std::move(drop));
      continue;
    } catch (const Error& e) {
      drop.reason = DropReason::kMalformedRecord;
      drop.detail = e.what();
      result.drops.push_back(std::move(drop));
      continue;
    }
    drop.paper_id = paper.id;
    if (!MatchesMonth(paper, opts.month_tag)) {
      drop.reason = DropReason::kMonthMismatch;
      drop.detail = "arXiv id '" + paper.ArxivId() + "' does not start with " + opts.month_tag;
      result.drops.push_back(std::move(drop));
      continue;
    }
    if (!seen_arxiv.insert(paper.ArxivId()).second) {
      drop.reason = DropReason::kDuplicateId;
      drop.detail = "arXiv id " + paper.ArxivId() + " seen earlier";
      result.drops.push_back(std::move(drop));
      continue;
    }
    auto outcome = Process(paper, corpus, opts);
    if (auto* rej = std::get_if<Rejection>(&outcome)) {
      drop.reason = rej->reason;
      drop.detail = std::move(rej->detail);
      result.drops.push_back(std::move(drop));
      continue;
    }
    result.examples.push_back(std::move(std::get<EvalExample>(outcome)));
  }

  auto by_id = [](const EvalExample& a, const EvalExample& b) { return a.query.source_id < b.query.source_id; };
  std::sort(result.examples.begin(), result.examples.end(), by_id);
  if (opts.sample && *opts.sample < result.examples.size()) {
    // Fisher-Yates over raw engine output so the sample is identical across
    // standard libraries.
    std::mt19937_64 rng(opts.seed);
    auto& ex = result.examples;
    for (std::size_t i = ex.size() - 1; i > 0; --i) std::swap(ex[i], ex[rng() % (i + 1)]);
    result.sampled_out = ex.size() - *opts.sample;
    ex.resize(*opts.sample);
    std::sort(ex.begin(), ex.end(), by_id);
  }
  return result;
}

BuildResult BuildEvalSetFromFile(const std::filesystem::path& path, const CitationCorpus& corpus,
                                 const BuildOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  return BuildEvalSet(lines, corpus, opts);
}

nlohmann::json DatasetStats::ToJson() const {
  return json{{"examples", examples},
              {"input_count", input_count},
              {"total_citations", total_citations},
              {"mean_related_work_words", mean_related_work_words},
              {"mean_abstract_words", mean_abstract_words},
              {"mean_citations", mean_citations},
              {"drops", drops}};
}

std::string DatasetStats::Serialize() const { return ToJson().dump(2) + "\n"; }

DatasetStats ComputeStats(const std::vector<EvalExample>& examples) {
  if (examples.empty()) throw Error(ErrorCode::kEmptyInput, "no examples to summarize");
  DatasetStats s;
  s.examples = examples.size();
  s.input_count = examples.size();
  std::size_t rw_words = 0, abs_words = 0;
  for (const auto& e : examples) {
    rw_words += text::WordCount(e.gt_related_work);
    abs_words += text::WordCount(e.query.text);
    s.total_citations += e.gt_citations.size();
  }
  const auto n = static_cast<double>(examples.size());
  s.mean_related_work_words = static_cast<double>(rw_words) / n;
  s.mean_abstract_words = static_cast<double>(abs_words) / n;
  s.mean_citations = static_cast<double>(s.total_citations) / n;
  return s;
}

DatasetStats ComputeStats(const BuildResult& result) {
  auto s = ComputeStats(result.examples);
  s.drops = result.DropCounts();
  s.input_count = result.input_count;
  return s;
}

void WriteExamples(const std::filesystem::path& path, const std::vector<EvalExample>& examples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& e : examples) out << json(e).dump() << '\n';
}

std::vector<EvalExample> ReadExamples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<EvalExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::Trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<EvalExample>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kIngestError, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace litrev::dataset
