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

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "litrev/query_generation.hpp"
#include "litrev/types.hpp"

namespace litrev::retrieval {

enum class BackendKind { kAcademicGraph, kWebSearch, kLocalFixture };

std::string_view ToString(BackendKind k);
BackendKind ParseBackendKind(std::string_view s);

struct SearchBackend {
  BackendKind kind = BackendKind::kLocalFixture;
  std::string name;      // label used in provenance and cache keys
  std::string endpoint;  // base URL, or fixture path for local_fixture
  int page_limit = 100;
  std::string credential_env;  // environment variable holding the API key
  double max_requests_per_second = 0.0;

  static SearchBackend FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

/// Spaces out calls to at most `per_second` per second across threads.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);
  void Acquire();

 private:
  std::chrono::nanoseconds interval_{0};
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

/// Transport for one backend. Returns the backend's raw JSON so it can be
/// cached verbatim and normalized later.
class SearchClient {
 public:
  explicit SearchClient(SearchBackend backend);
  virtual ~SearchClient() = default;

  const SearchBackend& backend() const { return backend_; }

  /// Throws Error(kBackendUnavailable).
  nlohmann::json FetchRaw(const KeywordQuery& q, std::optional<Date> cutoff, int limit);

  std::size_t request_count() const { return requests_.load(); }

 protected:
  virtual nlohmann::json DoFetch(const KeywordQuery& q, std::optional<Date> cutoff, int limit) = 0;
  void CountRequest() { ++requests_; }

 private:
  SearchBackend backend_;
  RateLimiter limiter_;
  std::atomic<std::size_t> requests_{0};
};

/// Offline backend over a JSON fixture. Two shapes are accepted:
///   * NDJSON of paper records: the corpus is searched by counting distinct
///     query terms present in title+abstract (ties keep file order);
///   * `{"responses": {"<terms>": [records]}, "default": [records]}`: canned
///     per-query result lists returned in file order.
class LocalFixtureClient : public SearchClient {
 public:
  explicit LocalFixtureClient(SearchBackend backend);
  LocalFixtureClient(SearchBackend backend, std::vector<nlohmann::json> corpus);

 protected:
  nlohmann::json DoFetch(const KeywordQuery& q, std::optional<Date> cutoff, int limit) override;

 private:
  std::vector<nlohmann::json> corpus_;
  nlohmann::json canned_;
};

/// Semantic Scholar style `/graph/v1/paper/search`.
class AcademicGraphClient : public SearchClient {
 public:
  using SearchClient::SearchClient;

 protected:
  nlohmann::json DoFetch(const KeywordQuery& q, std::optional<Date> cutoff, int limit) override;
};

/// SerpAPI style Google Scholar `/search.json`.
class WebSearchClient : public SearchClient {
 public:
  using SearchClient::SearchClient;

 protected:
  nlohmann::json DoFetch(const KeywordQuery& q, std::optional<Date> cutoff, int limit) override;
};

std::unique_ptr<SearchClient> MakeSearchClient(const SearchBackend& backend);

struct NormalizedResults {
  std::vector<PaperRecord> records;
  std::size_t dropped = 0;
};

/// Maps a raw backend response onto PaperRecords. Records missing an id, an
/// abstract or a usable date are dropped and counted.
NormalizedResults Normalize(BackendKind kind, const nlohmann::json& raw);

/// Content-addressed store of raw backend responses. Writes go through a
/// temporary file and a rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string Key(const SearchBackend& b, const KeywordQuery& q, std::optional<Date> cutoff, int limit);
  std::optional<nlohmann::json> Get(const std::string& key) const;
  void Put(const std::string& key, const nlohmann::json& raw) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct SearchStats {
  std::size_t dropped = 0;
  std::size_t backend_requests = 0;
  std::size_t cache_hits = 0;
};

/// Results in backend rank order, all dated strictly before `cutoff` (when
/// given), at most `limit` of them.
std::vector<PaperRecord> Search(SearchClient& client, const KeywordQuery& q, std::optional<Date> cutoff,
                                int limit, SearchStats* stats = nullptr, const ResponseCache* cache = nullptr);

/// One ranked result list tagged with where it came from.
struct SourceList {
  int query_rank = 1;
  std::string backend;
  std::vector<PaperRecord> results;
};

/// Equal-share merge: floor(target/m) from each of the m lists, remainder to
/// the earliest lists, duplicates skipped (first taker owns the paper), and
/// any shortfall backfilled evenly from lists that still have results.
/// Throws Error(kEmptyInput) when every list is empty.
CandidateSet MergeRoundRobin(const std::vector<SourceList>& sources, int target);
/// Convenience form: list i is attributed to query rank i+1.
CandidateSet MergeRoundRobin(const std::vector<std::vector<PaperRecord>>& lists, int target);

struct PoolOptions {
  int target = 100;
  /// Results requested per (backend, query); 0 means `target`.
  int per_query_depth = 0;
  int parallelism = 4;
  const ResponseCache* cache = nullptr;
};

struct PoolReport {
  SearchStats stats;
  /// Set when fewer than `target` distinct eligible papers exist.
  std::optional<std::size_t> underflow;
};

struct AssembledPool {
  CandidateSet pool;
  PoolReport report;
};

/// Fans out Search over backends x queries and merges query-major.
AssembledPool AssemblePool(const QueryAbstract& abstract, const std::vector<SearchClient*>& clients,
                           const std::vector<KeywordQuery>& queries, const PoolOptions& opts);

}  // namespace litrev::retrieval
