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

#include <httplib.h>

#include <chrono>
#include <cstdlib>

#include "litrev/error.hpp"
#include "litrev/retrieval.hpp"

namespace litrev::retrieval {

using nlohmann::json;

namespace {

std::string Credential(const SearchBackend& b) {
  if (b.credential_env.empty()) return {};
  const char* v = std::getenv(b.credential_env.c_str());
  return v ? v : "";
}

// Splits "http://host:port/prefix" into a client base and a path prefix.
std::pair<std::string, std::string> SplitEndpoint(const std::string& endpoint) {
  auto scheme = endpoint.find("://");
  auto path_start = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  std::string prefix = endpoint.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {endpoint.substr(0, path_start), prefix};
}

json GetJson(const SearchBackend& b, const std::string& path, const httplib::Params& params,
             const httplib::Headers& headers) {
  auto [base, prefix] = SplitEndpoint(b.endpoint);
  httplib::Client cli(base);
  cli.set_connection_timeout(30);
  cli.set_read_timeout(60);
  auto res = cli.Get(prefix + path, params, headers);
  if (!res) {
    throw Error(ErrorCode::kBackendUnavailable, b.name + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kBackendUnavailable, b.name + ": HTTP " + std::to_string(res->status));
  }
  auto j = json::parse(res->body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kBackendUnavailable, b.name + ": response is not JSON");
  return j;
}

}  // namespace

json AcademicGraphClient::DoFetch(const KeywordQuery& q, std::optional<Date> cutoff, int limit) {
  const auto& b = backend();
  httplib::Headers headers;
  if (auto key = Credential(b); !key.empty()) headers.emplace("x-api-key", key);

  json pages = json::array();
  int offset = 0;
  while (offset < limit) {
    const int page = std::min(b.page_limit, limit - offset);
    httplib::Params params{{"query", q.terms},
                           {"offset", std::to_string(offset)},
                           {"limit", std::to_string(page)},
                           {"fields", "paperId,title,abstract,publicationDate,year,externalIds,citationCount"}};
    if (cutoff) {
      // Inclusive upper bound on the day before the cutoff.
      auto day_before = std::chrono::sys_days(*cutoff) - std::chrono::days(1);
      params.emplace("publicationDateOrYear", ":" + FormatDate(Date(day_before)));
    }
    auto body = GetJson(b, "/graph/v1/paper/search", params, headers);
    const auto n = body.contains("data") && body["data"].is_array() ? body["data"].size() : 0;
    pages.push_back(std::move(body));
    if (n < static_cast<std::size_t>(page)) break;
    offset += page;
    if (offset < limit) CountRequest();
  }
  return json{{"pages", pages}};
}

json WebSearchClient::DoFetch(const KeywordQuery& q, std::optional<Date> cutoff, int limit) {
  const auto& b = backend();
  json pages = json::array();
  int start = 0;
  while (start < limit) {
    const int page = std::min(b.page_limit, limit - start);
    httplib::Params params{{"engine", "google_scholar"},
                           {"q", q.terms},
                           {"start", std::to_string(start)},
                           {"num", std::to_string(page)}};
    if (cutoff) params.emplace("as_yhi", std::to_string(static_cast<int>(cutoff->year())));
    if (auto key = Credential(b); !key.empty()) params.emplace("api_key", key);
    auto body = GetJson(b, "/search.json", params, {});
    const auto n = body.contains("organic_results") && body["organic_results"].is_array()
                       ? body["organic_results"].size()
                       : 0;
    pages.push_back(std::move(body));
    if (n < static_cast<std::size_t>(page)) break;
    start += page;
    if (start < limit) CountRequest();
  }
  return json{{"pages", pages}};
}

std::unique_ptr<SearchClient> MakeSearchClient(const SearchBackend& backend) {
  switch (backend.kind) {
    case BackendKind::kAcademicGraph: return std::make_unique<AcademicGraphClient>(backend);
    case BackendKind::kWebSearch: return std::make_unique<WebSearchClient>(backend);
    case BackendKind::kLocalFixture: return std::make_unique<LocalFixtureClient>(backend);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown backend kind");
}

}  // namespace litrev::retrieval
