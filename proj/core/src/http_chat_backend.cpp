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

#include "litrev/error.hpp"
#include "litrev/llm_gateway.hpp"

namespace litrev::llm {

using nlohmann::json;

HttpChatBackend::HttpChatBackend(ProviderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "provider endpoint is empty");
}

BackendReply HttpChatBackend::Send(const CompletionRequest& req) {
  httplib::Client cli(cfg_.endpoint);
  const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
  cli.set_connection_timeout(secs);
  cli.set_read_timeout(secs);

  json messages = json::array();
  if (!req.system_text.empty()) messages.push_back({{"role", "system"}, {"content", req.system_text}});
  messages.push_back({{"role", "user"}, {"content", req.user_text}});
  json body{{"model", req.model_id.empty() ? cfg_.model_id : req.model_id},
            {"messages", messages},
            {"max_tokens", req.max_output_tokens},
            {"temperature", req.temperature}};
  if (req.seed) body["seed"] = *req.seed;

  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  auto res = cli.Post(cfg_.path, headers, body.dump(), "application/json");
  if (!res) return BackendReply{0, {}, httplib::to_string(res.error())};
  if (res->status < 200 || res->status >= 300) return BackendReply{res->status, {}, res->body};

  try {
    auto j = json::parse(res->body);
    return BackendReply{res->status, j.at("choices").at(0).at("message").at("content").get<std::string>(), {}};
  } catch (const json::exception& e) {
    // A 2xx with an unreadable body is treated like a server fault.
    return BackendReply{502, {}, std::string("malformed completion body: ") + e.what()};
  }
}

}  // namespace litrev::llm
