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

// Stub embedding and judge servers speaking the same wire formats as the
// real endpoints. Replies reuse embed_toy and MockJudge.
//
//   POST {prefix}/embed              {"texts": [...]}
//                                    -> {"embeddings": [[...]], "dim": d}
//   POST {prefix}/chat/completions   {"model", "messages": [{role, content}]}
//                                    -> {"choices": [{"message": {"role", "content"}}]}

#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "semrank/common.hpp"
#include "semrank/embedder.hpp"
#include "semrank/judge.hpp"

namespace semrank::mockserve {

enum class StubMode {
  kToyEmbed,
  kFixedScore,
  kPreferLonger,
  kPreferShorter,
  kPreferLexicalOverlap,
  kFailWithStatus,
};

inline std::string to_string(StubMode m) {
  switch (m) {
    case StubMode::kToyEmbed: return "toy-embed";
    case StubMode::kFixedScore: return "fixed-score";
    case StubMode::kPreferLonger: return "prefer-longer";
    case StubMode::kPreferShorter: return "prefer-shorter";
    case StubMode::kPreferLexicalOverlap: return "prefer-lexical-overlap";
    case StubMode::kFailWithStatus: return "fail-with-status";
  }
  return "?";
}

inline StubMode stub_mode_from_string(std::string_view s) {
  for (auto m : {StubMode::kToyEmbed, StubMode::kFixedScore, StubMode::kPreferLonger,
                 StubMode::kPreferShorter, StubMode::kPreferLexicalOverlap,
                 StubMode::kFailWithStatus}) {
    if (to_string(m) == s) return m;
  }
  throw ValidationError("unknown stub mode '" + std::string(s) + "'");
}

struct StubBehavior {
  StubMode mode = StubMode::kToyEmbed;
  std::uint64_t seed = 0;  // replies do not depend on it; kept for the record
  std::size_t dim = 256;   // toy-embed
  int fixed_score = 7;     // fixed-score
  int fail_status = 500;   // fail-with-status
  // Optional bearer token the stub insists on (401 otherwise).
  std::optional<std::string> required_token;
  // Artificial latency per request.
  std::chrono::milliseconds delay{0};
  std::string prefix;  // path prefix, e.g. "/v1"
};

inline std::optional<MockRule> judge_rule(StubMode m) {
  switch (m) {
    case StubMode::kFixedScore: return MockRule::kFixedScore;
    case StubMode::kPreferLonger: return MockRule::kPreferLonger;
    case StubMode::kPreferShorter: return MockRule::kPreferShorter;
    case StubMode::kPreferLexicalOverlap: return MockRule::kPreferLexicalOverlap;
    default: return std::nullopt;
  }
}

// Runs an httplib server on a background thread until stop() or
// destruction.
class StubServer {
 public:
  StubServer() = default;
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;
  ~StubServer() { stop(); }

  // port 0 picks a free port. Throws if the port cannot be bound.
  void start(const StubBehavior& b, int port = 0, const std::string& host = "127.0.0.1") {
    if (running_) throw Error("stub server already running");
    behavior_ = b;
    server_ = std::make_unique<httplib::Server>();
    install_routes();
    if (port == 0) {
      port_ = server_->bind_to_any_port(host);
    } else {
      port_ = server_->bind_to_port(host, port) ? port : -1;
    }
    if (port_ <= 0) throw Error(fmt::format("cannot bind stub server to {}:{}", host, port));
    running_ = true;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    host_ = host;
  }

  void stop() {
    if (!running_) return;
    server_->stop();
    if (thread_.joinable()) thread_.join();
    running_ = false;
  }

  // Blocks the calling thread until stop() is called from elsewhere.
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string base_url() const {
    return fmt::format("http://{}:{}{}", host_, port_, behavior_.prefix);
  }

  // Number of texts in each /embed request, in arrival order.
  std::vector<std::size_t> embed_batch_sizes() const {
    std::lock_guard<std::mutex> lock(mu_);
    return batch_sizes_;
  }
  std::size_t request_count() const { return requests_.load(); }

 private:
  bool authorized(const httplib::Request& req) const {
    if (!behavior_.required_token) return true;
    return req.get_header_value("Authorization") == "Bearer " + *behavior_.required_token;
  }

  void install_routes() {
    server_->Post(behavior_.prefix + "/embed", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
      ++requests_;
      if (behavior_.delay.count() > 0) std::this_thread::sleep_for(behavior_.delay);
      if (!authorized(req)) {
        res.status = 401;
        res.set_content(R"({"error":"unauthorized"})", "application/json");
        return;
      }
      if (behavior_.mode == StubMode::kFailWithStatus) {
        res.status = behavior_.fail_status;
        res.set_content(R"({"error":"configured failure"})", "application/json");
        return;
      }
      if (behavior_.mode != StubMode::kToyEmbed) {
        res.status = 404;
        return;
      }
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
        const auto texts = body.at("texts").get<std::vector<std::string>>();
        {
          std::lock_guard<std::mutex> lock(mu_);
          batch_sizes_.push_back(texts.size());
        }
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& t : texts) rows.push_back(embed_toy(t, behavior_.dim).values);
        res.set_content(nlohmann::json{{"embeddings", rows}, {"dim", behavior_.dim}}.dump(),
                        "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });

    server_->Post(behavior_.prefix + "/chat/completions", [this](const httplib::Request& req,
                                                                 httplib::Response& res) {
      ++requests_;
      if (behavior_.delay.count() > 0) std::this_thread::sleep_for(behavior_.delay);
      if (!authorized(req)) {
        res.status = 401;
        res.set_content(R"({"error":"unauthorized"})", "application/json");
        return;
      }
      if (behavior_.mode == StubMode::kFailWithStatus) {
        res.status = behavior_.fail_status;
        res.set_content(R"({"error":"configured failure"})", "application/json");
        return;
      }
      const auto rule = judge_rule(behavior_.mode);
      if (!rule) {
        res.status = 404;
        return;
      }
      try {
        const auto body = nlohmann::json::parse(req.body);
        ChatRequest chat;
        for (const auto& m : body.at("messages")) {
          const auto role = m.at("role").get<std::string>();
          const auto content = m.at("content").get<std::string>();
          if (role == "system") chat.system += content;
          if (role == "user") chat.user += content;
        }
        const MockJudge judge(*rule, behavior_.fixed_score);
        const nlohmann::json out = {
            {"model", body.value("model", std::string("mock"))},
            {"choices",
             {{{"index", 0},
               {"message", {{"role", "assistant"}, {"content", judge.reply(chat)}}},
               {"finish_reason", "stop"}}}}};
        res.set_content(out.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });
  }

  StubBehavior behavior_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = -1;
  bool running_ = false;
  mutable std::mutex mu_;
  std::vector<std::size_t> batch_sizes_;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace semrank::mockserve
