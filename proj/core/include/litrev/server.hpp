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

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "litrev/error.hpp"
#include "litrev/service.hpp"

namespace litrev::service {

struct ApiRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> headers;  // lowercase names
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  std::map<std::string, std::string> headers;
};

/// 400 bad input, 404 missing, 422 well-formed but unusable (plans, keys,
/// vectors), 429 budget, 502 upstream, 500 otherwise.
int HttpStatusFor(ErrorCode code);

/// {"api_version", "code", "stage", "message"}.
nlohmann::json ErrorEnvelope(const Error& e);

/// JSON API over a Pipeline. No authentication: bind to a trusted interface.
///   GET  /health
///   POST /retrieve     {abstract, publication_date?, source_id?, options?{sort_by}}
///   POST /generate     {abstract, paper_ids, strategy, plan?, run_id?, papers?}
///                      (Idempotency-Key header replays the stored response)
///   POST /plan/derive  {plan? | text? | num_papers}
///   GET  /runs/{id}
class ApiServer {
 public:
  explicit ApiServer(Pipeline& pipeline);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Transport-free dispatch; every response body carries api_version.
  ApiResponse Handle(const ApiRequest& req);

  /// Serves files under `dir` at "/" (the browser UI build).
  void ServeStatic(const std::filesystem::path& dir);

  /// Returns the bound port, or -1.
  int Bind(const std::string& host, int port);
  int BindToAnyPort(const std::string& host);
  /// Blocks until Stop().
  void ListenAfterBind();
  void Stop();
  bool IsRunning() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace litrev::service
