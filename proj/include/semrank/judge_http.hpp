// Copyright 2026 The semrank Authors.
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

// Chat-completions judge client.
//
//   POST {base_url}/chat/completions
//   request:  {"model": M, "temperature": 0,
//              "messages": [{"role": "system", "content": ...},
//                           {"role": "user", "content": ...}]}
//   response: {"choices": [{"message": {"content": "..."}}]}

#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "semrank/http_util.hpp"
#include "semrank/judge.hpp"

namespace semrank {

struct JudgeEndpointConfig {
  std::string base_url;
  std::string model = "judge";
  std::optional<std::string> auth_token;
  double timeout_seconds = 60.0;
  // Extra attempts after a transport failure or non-2xx status.
  int max_retries = 1;

  // SEMRANK_JUDGE_URL / SEMRANK_JUDGE_TOKEN / SEMRANK_JUDGE_MODEL override.
  static JudgeEndpointConfig from_env() { return from_env(JudgeEndpointConfig()); }
  static JudgeEndpointConfig from_env(JudgeEndpointConfig base) {
    if (auto v = http::env("SEMRANK_JUDGE_URL")) base.base_url = *v;
    if (auto v = http::env("SEMRANK_JUDGE_TOKEN")) base.auth_token = *v;
    if (auto v = http::env("SEMRANK_JUDGE_MODEL")) base.model = *v;
    return base;
  }
};

class HttpJudgeClient final : public JudgeClient {
 public:
  explicit HttpJudgeClient(JudgeEndpointConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) throw ValidationError("judge base_url is empty");
    url_ = http::split_url(cfg_.base_url);
  }

  std::string id() const override { return cfg_.model; }

  std::string complete(const ChatRequest& req) override {
    const nlohmann::json body = {
        {"model", cfg_.model},
        {"temperature", 0},
        {"messages",
         {{{"role", "system"}, {"content", req.system}},
          {{"role", "user"}, {"content", req.user}}}}};
    httplib::Headers headers;
    if (cfg_.auth_token) headers.emplace("Authorization", "Bearer " + *cfg_.auth_token);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      httplib::Client cli(url_.origin);
      http::set_timeouts(cli, cfg_.timeout_seconds);
      auto res = cli.Post(url_.prefix + "/chat/completions", headers, body.dump(),
                          "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (!http::is_2xx(res->status)) {
        last_error = "HTTP status " + std::to_string(res->status);
        continue;
      }
      try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        // A garbled body is a reply the caller cannot parse, not a transport
        // failure.
        return std::string();
      }
    }
    throw JudgeTransportError("judge '" + cfg_.model + "' unreachable: " + last_error);
  }

 private:
  JudgeEndpointConfig cfg_;
  http::SplitUrl url_;
};

// "mock:<rule>" gives an in-process mock; "http", "http:<model>" or
// "http:<model>@<base_url>" talks to an endpoint, the configured one unless
// a URL is given.
inline std::unique_ptr<JudgeClient> make_judge(const std::string& spec,
                                               const JudgeEndpointConfig& endpoint) {
  if (auto mock = parse_mock_judge(spec)) return std::make_unique<MockJudge>(*mock);
  if (spec == "http" || spec.rfind("http:", 0) == 0) {
    auto cfg = endpoint;
    std::string rest = spec.size() > 5 ? spec.substr(5) : std::string();
    if (const auto at = rest.find('@'); at != std::string::npos) {
      cfg.base_url = rest.substr(at + 1);
      rest.resize(at);
    }
    if (!rest.empty()) cfg.model = rest;
    return std::make_unique<HttpJudgeClient>(cfg);
  }
  throw ValidationError("unknown judge '" + spec + "'");
}

}  // namespace semrank
