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

#include "litrev/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <random>
#include <regex>
#include <semaphore>
#include <set>
#include <thread>
#include <unordered_set>

#include "litrev/error.hpp"
#include "litrev/text.hpp"

namespace litrev::retrieval {

using nlohmann::json;

std::string_view ToString(BackendKind k) {
  switch (k) {
    case BackendKind::kAcademicGraph: return "academic_graph";
    case BackendKind::kWebSearch: return "web_search";
    case BackendKind::kLocalFixture: return "local_fixture";
  }
  return "local_fixture";
}

BackendKind ParseBackendKind(std::string_view s) {
  if (s == "academic_graph") return BackendKind::kAcademicGraph;
  if (s == "web_search") return BackendKind::kWebSearch;
  if (s == "local_fixture") return BackendKind::kLocalFixture;
  throw Error(ErrorCode::kInvalidArgument, "unknown backend kind '" + std::string(s) + "'");
}

SearchBackend SearchBackend::FromJson(const json& j) {
  SearchBackend b;
  b.kind = ParseBackendKind(j.at("kind").get<std::string>());
  b.endpoint = j.at("endpoint").get<std::string>();
  b.name = j.value("name", std::string(ToString(b.kind)));
  b.page_limit = j.value("page_limit", b.page_limit);
  b.credential_env = j.value("credential_env", "");
  b.max_requests_per_second = j.value("max_requests_per_second", 0.0);
  if (b.page_limit < 1) throw Error(ErrorCode::kInvalidArgument, "page_limit must be >= 1");
  return b;
}

json SearchBackend::ToJson() const {
  return json{{"kind", std::string(ToString(kind))},
              {"name", name},
              {"endpoint", endpoint},
              {"page_limit", page_limit},
              {"credential_env", credential_env},
              {"max_requests_per_second", max_requests_per_second}};
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double per_second) {
  if (per_second > 0) {
    interval_ = std::chrono::nanoseconds(static_cast<std::int64_t>(1e9 / per_second));
  }
}

void RateLimiter::Acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    slot = std::max(std::chrono::steady_clock::now(), next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

SearchClient::SearchClient(SearchBackend backend)
    : backend_(std::move(backend)), limiter_(backend_.max_requests_per_second) {}

json SearchClient::FetchRaw(const KeywordQuery& q, std::optional<Date> cutoff, int limit) {
  limiter_.Acquire();
  CountRequest();
  return DoFetch(q, cutoff, limit);
}

// ---------------------------------------------------------------------------
// Local fixtures

namespace {

std::vector<std::string> Terms(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

LocalFixtureClient::LocalFixtureClient(SearchBackend backend) : SearchClient(std::move(backend)) {
  std::ifstream in(this->backend().endpoint);
  if (!in) {
    throw Error(ErrorCode::kBackendUnavailable, "cannot open fixture " + this->backend().endpoint);
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto first = content.find_first_not_of(" \t\r\n");
  try {
    // A canned file is a single object with a "responses" member.
    if (first != std::string::npos && content[first] == '{') {
      auto whole = json::parse(content, nullptr, false);
      if (!whole.is_discarded() && whole.is_object() && whole.contains("responses")) {
        canned_ = std::move(whole);
        return;
      }
    }
    for (const auto& line : text::SplitLines(content)) {
      if (text::Trim(line).empty()) continue;
      corpus_.push_back(json::parse(line));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBackendUnavailable, "bad fixture " + this->backend().endpoint + ": " + e.what());
  }
}

LocalFixtureClient::LocalFixtureClient(SearchBackend backend, std::vector<json> corpus)
    : SearchClient(std::move(backend)), corpus_(std::move(corpus)) {}

json LocalFixtureClient::DoFetch(const KeywordQuery& q, std::optional<Date>, int limit) {
  json data = json::array();
  if (!canned_.is_null()) {
    const auto& responses = canned_.at("responses");
    if (responses.contains(q.terms)) {
      data = responses.at(q.terms);
    } else if (canned_.contains("default")) {
      data = canned_.at("default");
    }
    return json{{"data", data}};
  }

  const auto query_terms = Terms(q.terms);
  const std::set<std::string> wanted(query_terms.begin(), query_terms.end());
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, index)
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    const auto& r = corpus_[i];
    std::set<std::string> doc;
    for (auto& t : Terms(r.value("title", "") + " " + r.value("abstract", ""))) doc.insert(std::move(t));
    std::size_t score = 0;
    for (const auto& t : wanted) score += doc.count(t);
    if (score > 0) scored.emplace_back(score, i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](auto a, auto b) { return a.first > b.first; });
  // The fixture returns everything it matched; Search applies the cutoff and
  // limit. The depth requested only bounds unfiltered output.
  (void)limit;
  for (const auto& [score, idx] : scored) data.push_back(corpus_[idx]);
  return json{{"data", data}};
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

std::optional<PaperRecord> FromLocal(const json& r) {
  static const std::set<std::string> kKnown = {"paper_id", "title", "abstract", "publication_date",
                                               "external_ids", "embedding", "citation_count", "raw"};
  if (!r.is_object()) return std::nullopt;
  auto id = r.value("paper_id", json()).is_string() ? r["paper_id"].get<std::string>() : "";
  auto abstract = r.value("abstract", json()).is_string() ? r["abstract"].get<std::string>() : "";
  auto date = r.value("publication_date", json()).is_string()
                  ? TryParseDate(r["publication_date"].get<std::string>())
                  : std::nullopt;
  if (id.empty() || text::Trim(abstract).empty() || !date) return std::nullopt;
  PaperRecord p;
  try {
    p = r.get<PaperRecord>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
  for (const auto& [k, v] : r.items()) {
    if (!kKnown.count(k)) p.raw[k] = v;
  }
  return p;
}

std::optional<PaperRecord> FromAcademicGraph(const json& r) {
  static const std::set<std::string> kKnown = {"paperId", "title", "abstract", "publicationDate",
                                               "year", "externalIds", "citationCount"};
  if (!r.is_object()) return std::nullopt;
  PaperRecord p;
  p.paper_id = r.value("paperId", json()).is_string() ? r["paperId"].get<std::string>() : "";
  p.title = r.value("title", json()).is_string() ? r["title"].get<std::string>() : "";
  p.abstract = r.value("abstract", json()).is_string() ? r["abstract"].get<std::string>() : "";
  if (p.paper_id.empty() || text::Trim(p.abstract).empty()) return std::nullopt;
  std::optional<Date> date;
  if (r.value("publicationDate", json()).is_string()) date = TryParseDate(r["publicationDate"].get<std::string>());
  if (!date && r.value("year", json()).is_number_integer()) {
    date = TryParseDate(std::to_string(r["year"].get<int>()));
  }
  if (!date) return std::nullopt;
  p.publication_date = *date;
  if (r.value("externalIds", json()).is_object()) {
    for (const auto& [scheme, v] : r["externalIds"].items()) {
      if (v.is_string()) p.external_ids[scheme] = v.get<std::string>();
      else if (v.is_number()) p.external_ids[scheme] = v.dump();
    }
  }
  if (r.value("citationCount", json()).is_number_integer()) p.citation_count = r["citationCount"].get<int>();
  for (const auto& [k, v] : r.items()) {
    if (!kKnown.count(k)) p.raw[k] = v;
  }
  return p;
}

std::optional<PaperRecord> FromWebSearch(const json& r) {
  static const std::set<std::string> kKnown = {"result_id", "title", "snippet", "publication_info"};
  static const std::regex kYear(R"(\b(19|20)\d{2}\b)");
  if (!r.is_object()) return std::nullopt;
  PaperRecord p;
  p.paper_id = r.value("result_id", json()).is_string() ? r["result_id"].get<std::string>() : "";
  p.title = r.value("title", json()).is_string() ? r["title"].get<std::string>() : "";
  p.abstract = r.value("snippet", json()).is_string() ? r["snippet"].get<std::string>() : "";
  if (p.paper_id.empty() || text::Trim(p.abstract).empty()) return std::nullopt;
  std::string summary;
  if (r.contains("publication_info") && r["publication_info"].is_object()) {
    summary = r["publication_info"].value("summary", "");
  }
  std::smatch m;
  if (!std::regex_search(summary, m, kYear)) return std::nullopt;
  p.publication_date = ParseDate(m.str(0));
  p.external_ids["scholar"] = p.paper_id;
  if (auto it = r.find("inline_links"); it != r.end() && it->is_object()) {
    auto cited = it->value("cited_by", json::object());
    if (cited.is_object() && cited.value("total", json()).is_number_integer()) {
      p.citation_count = cited["total"].get<int>();
    }
  }
  for (const auto& [k, v] : r.items()) {
    if (!kKnown.count(k)) p.raw[k] = v;
  }
  return p;
}

}  // namespace

NormalizedResults Normalize(BackendKind kind, const json& raw) {
  NormalizedResults out;
  std::vector<const json*> pages;
  if (raw.contains("pages") && raw["pages"].is_array()) {
    for (const auto& p : raw["pages"]) pages.push_back(&p);
  } else {
    pages.push_back(&raw);
  }
  const char* list_key = kind == BackendKind::kWebSearch ? "organic_results" : "data";
  for (const json* page : pages) {
    if (!page->is_object() || !page->contains(list_key) || !(*page)[list_key].is_array()) continue;
    for (const auto& r : (*page)[list_key]) {
      std::optional<PaperRecord> rec;
      switch (kind) {
        case BackendKind::kLocalFixture: rec = FromLocal(r); break;
        case BackendKind::kAcademicGraph: rec = FromAcademicGraph(r); break;
        case BackendKind::kWebSearch: rec = FromWebSearch(r); break;
      }
      if (rec) {
        out.records.push_back(std::move(*rec));
      } else {
        ++out.dropped;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string ResponseCache::Key(const SearchBackend& b, const KeywordQuery& q, std::optional<Date> cutoff,
                               int limit) {
  std::string material = std::string(ToString(b.kind)) + "\n" + b.endpoint + "\n" + q.terms + "\n" +
                         (cutoff ? FormatDate(*cutoff) : std::string("-")) + "\n" + std::to_string(limit);
  return text::Sha256Hex(material);
}

std::optional<json> ResponseCache::Get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

void ResponseCache::Put(const std::string& key, const json& raw) const {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  auto final_path = dir_ / (key + ".json");
  auto tmp = dir_ / (key + ".json.tmp" + std::to_string(rng()));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write cache entry " + tmp.string());
    out << raw.dump();
  }
  std::filesystem::rename(tmp, final_path);
}

// ---------------------------------------------------------------------------

std::vector<PaperRecord> Search(SearchClient& client, const KeywordQuery& q, std::optional<Date> cutoff,
                                int limit, SearchStats* stats, const ResponseCache* cache) {
  if (limit < 1) throw Error(ErrorCode::kInvalidArgument, "search limit must be >= 1");
  SearchStats local;
  json raw;
  std::string key;
  std::optional<json> hit;
  if (cache) {
    key = ResponseCache::Key(client.backend(), q, cutoff, limit);
    hit = cache->Get(key);
  }
  if (hit) {
    raw = std::move(*hit);
    ++local.cache_hits;
  } else {
    raw = client.FetchRaw(q, cutoff, limit);
    ++local.backend_requests;
    if (cache) cache->Put(key, raw);
  }

  auto normalized = Normalize(client.backend().kind, raw);
  local.dropped = normalized.dropped;
  std::vector<PaperRecord> out;
  for (auto& rec : normalized.records) {
    if (static_cast<int>(out.size()) >= limit) break;
    if (cutoff && !(rec.publication_date < *cutoff)) continue;
    out.push_back(std::move(rec));
  }
  if (stats) {
    stats->dropped += local.dropped;
    stats->backend_requests += local.backend_requests;
    stats->cache_hits += local.cache_hits;
  }
  return out;
}

CandidateSet MergeRoundRobin(const std::vector<SourceList>& sources, int target) {
  if (target < 1) throw Error(ErrorCode::kInvalidArgument, "merge target must be >= 1");
  if (std::all_of(sources.begin(), sources.end(), [](const auto& s) { return s.results.empty(); })) {
    throw Error(ErrorCode::kEmptyInput, "every result list is empty");
  }

  const std::size_t m = sources.size();
  std::vector<std::size_t> cursor(m, 0);
  std::unordered_set<std::string> taken;
  CandidateSet out;

  auto take_from = [&](std::size_t i, std::size_t want) {
    std::size_t got = 0;
    const auto& list = sources[i].results;
    while (got < want && cursor[i] < list.size()) {
      const auto& paper = list[cursor[i]++];
      if (!taken.insert(paper.paper_id).second) continue;
      out.provenance[paper.paper_id] =
          Provenance{sources[i].query_rank, static_cast<int>(cursor[i]), sources[i].backend};
      out.candidates.push_back(paper);
      ++got;
    }
    return got;
  };

  const auto t = static_cast<std::size_t>(target);
  std::size_t shortfall = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t quota = t / m + (i < t % m ? 1 : 0);
    shortfall += quota - take_from(i, quota);
  }

  while (shortfall > 0) {
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < m; ++i) {
      if (cursor[i] < sources[i].results.size()) survivors.push_back(i);
    }
    if (survivors.empty()) break;
    const std::size_t share = shortfall / survivors.size();
    const std::size_t extra = shortfall % survivors.size();
    for (std::size_t j = 0; j < survivors.size() && shortfall > 0; ++j) {
      const std::size_t want = std::min(shortfall, share + (j < extra ? 1 : 0));
      if (want == 0) continue;
      shortfall -= take_from(survivors[j], want);
    }
  }
  return out;
}

CandidateSet MergeRoundRobin(const std::vector<std::vector<PaperRecord>>& lists, int target) {
  std::vector<SourceList> sources;
  sources.reserve(lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) {
    sources.push_back(SourceList{static_cast<int>(i) + 1, {}, lists[i]});
  }
  return MergeRoundRobin(sources, target);
}

AssembledPool AssemblePool(const QueryAbstract& abstract, const std::vector<SearchClient*>& clients,
                           const std::vector<KeywordQuery>& queries, const PoolOptions& opts) {
  if (queries.empty()) throw Error(ErrorCode::kInvalidArgument, "no keyword queries");
  if (clients.empty()) throw Error(ErrorCode::kInvalidArgument, "no search backends");
  if (opts.target < 1) throw Error(ErrorCode::kInvalidArgument, "pool target must be >= 1");
  const int depth = opts.per_query_depth > 0 ? opts.per_query_depth : opts.target;

  struct Task {
    const KeywordQuery* query;
    SearchClient* client;
  };
  std::vector<Task> tasks;
  for (const auto& q : queries) {
    for (auto* c : clients) tasks.push_back(Task{&q, c});
  }

  std::vector<SourceList> sources(tasks.size());
  std::vector<SearchStats> stats(tasks.size());
  std::counting_semaphore<> slots(std::max(1, opts.parallelism));
  std::vector<std::future<void>> pending;
  pending.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    slots.acquire();
    pending.push_back(std::async(std::launch::async, [&, i] {
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{slots};
      const auto& task = tasks[i];
      sources[i].query_rank = task.query->rank;
      sources[i].backend = task.client->backend().name;
      sources[i].results =
          Search(*task.client, *task.query, abstract.publication_date, depth, &stats[i], opts.cache);
    }));
  }
  for (auto& f : pending) f.get();

  AssembledPool result;
  for (const auto& s : stats) {
    result.report.stats.dropped += s.dropped;
    result.report.stats.backend_requests += s.backend_requests;
    result.report.stats.cache_hits += s.cache_hits;
  }
  const bool any = std::any_of(sources.begin(), sources.end(), [](const auto& s) { return !s.results.empty(); });
  if (any) result.pool = MergeRoundRobin(sources, opts.target);
  result.pool.query = abstract;
  if (result.pool.candidates.size() < static_cast<std::size_t>(opts.target)) {
    result.report.underflow = result.pool.candidates.size();
  }
  return result;
}

}  // namespace litrev::retrieval
