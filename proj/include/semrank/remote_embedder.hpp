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

// Client for an external encoder service.
//
// Wire contract:
//   POST {base_url}/embed
//   request:  {"texts": ["...", ...]}
//   response: {"embeddings": [[...], ...], "dim": d}
// with "Authorization: Bearer <token>" when a token is configured. Pooling is
// the service's business; vectors are treated as opaque.

#pragma once

#include <future>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semrank/embedder.hpp"
#include "semrank/http_util.hpp"

namespace semrank {

struct EncoderEndpointConfig {
  std::string base_url;
  double timeout_seconds = 30.0;
  std::size_t batch_size = 32;
  std::optional<std::string> auth_token;
  // Extra attempts per batch after a transport, timeout or status failure.
  int max_retries = 0;
  // Batches in flight at once.
  std::size_t parallelism = 1;

  void validate() const {
    if (base_url.empty()) throw ValidationError("encoder base_url is empty");
    if (batch_size < 1) throw ValidationError("encoder batch_size must be >= 1");
    if (parallelism < 1) throw ValidationError("encoder parallelism must be >= 1");
    if (max_retries < 0) throw ValidationError("encoder max_retries must be >= 0");
  }

  // SEMRANK_EMBED_URL / SEMRANK_EMBED_TOKEN override the given values.
  static EncoderEndpointConfig from_env() { return from_env(EncoderEndpointConfig()); }
  static EncoderEndpointConfig from_env(EncoderEndpointConfig base) {
    if (auto url = http::env("SEMRANK_EMBED_URL")) base.base_url = *url;
    if (auto tok = http::env("SEMRANK_EMBED_TOKEN")) base.auth_token = *tok;
    return base;
  }
};

class EmbedError : public Error {
 public:
  enum class Kind { kTransport, kTimeout, kStatus, kDimensionMismatch, kProtocol };

  EmbedError(Kind kind, std::size_t batch_index, std::string detail, int status = 0)
      : Error(format(kind, batch_index, detail, status)),
        kind_(kind),
        batch_index_(batch_index),
        status_(status) {}

  Kind kind() const { return kind_; }
  std::size_t batch_index() const { return batch_index_; }
  int status() const { return status_; }

 private:
  static std::string format(Kind kind, std::size_t batch, const std::string& detail,
                            int status) {
    std::string k;
    switch (kind) {
      case Kind::kTransport: k = "transport error"; break;
      case Kind::kTimeout: k = "timeout"; break;
      case Kind::kStatus: k = "HTTP status " + std::to_string(status); break;
      case Kind::kDimensionMismatch: k = "dimension mismatch"; break;
      case Kind::kProtocol: k = "malformed response"; break;
    }
    return "embed batch " + std::to_string(batch) + ": " + k +
           (detail.empty() ? "" : " (" + detail + ")");
  }

  Kind kind_;
  std::size_t batch_index_;
  int status_;
};

namespace detail {

struct BatchResult {
  std::vector<EmbeddingVector> vectors;
  std::size_t dim = 0;
};

inline BatchResult embed_batch_once(const EncoderEndpointConfig& cfg,
                                    const std::vector<std::string>& texts,
                                    std::size_t batch_index) {
  using Kind = EmbedError::Kind;
  const auto url = http::split_url(cfg.base_url);
  httplib::Client cli(url.origin);
  http::set_timeouts(cli, cfg.timeout_seconds);
  httplib::Headers headers;
  if (cfg.auth_token) headers.emplace("Authorization", "Bearer " + *cfg.auth_token);

  const nlohmann::json body = {{"texts", texts}};
  const auto start = std::chrono::steady_clock::now();
  auto res = cli.Post(url.prefix + "/embed", headers, body.dump(), "application/json");
  if (!res) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= cfg.timeout_seconds * 0.95)) {
      throw EmbedError(Kind::kTimeout, batch_index, httplib::to_string(err));
    }
    throw EmbedError(Kind::kTransport, batch_index, httplib::to_string(err));
  }
  if (!http::is_2xx(res->status)) {
    throw EmbedError(Kind::kStatus, batch_index, res->body, res->status);
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw EmbedError(Kind::kProtocol, batch_index, e.what());
  }
  if (!j.contains("embeddings") || !j["embeddings"].is_array()) {
    throw EmbedError(Kind::kProtocol, batch_index, "missing 'embeddings' array");
  }
  const auto& arr = j["embeddings"];
  if (arr.size() != texts.size()) {
    throw EmbedError(Kind::kProtocol, batch_index,
                     "expected " + std::to_string(texts.size()) + " vectors, got " +
                         std::to_string(arr.size()));
  }
  BatchResult out;
  out.dim = j.contains("dim") ? j["dim"].get<std::size_t>()
                              : (arr.empty() ? 0 : arr.front().size());
  for (const auto& row : arr) {
    if (!row.is_array() || row.size() != out.dim || out.dim == 0) {
      throw EmbedError(Kind::kDimensionMismatch, batch_index,
                       "vector length " + std::to_string(row.size()) +
                           " vs advertised " + std::to_string(out.dim));
    }
    try {
      out.vectors.emplace_back(row.get<std::vector<double>>());
    } catch (const std::exception& e) {
      throw EmbedError(Kind::kProtocol, batch_index, e.what());
    }
  }
  return out;
}

}  // namespace detail

// One vector per input, in input order. Requests carry at most batch_size
// texts each.
inline std::vector<EmbeddingVector> embed_remote(const std::vector<std::string>& texts,
                                                 const EncoderEndpointConfig& cfg) {
  cfg.validate();
  if (texts.empty()) throw Error("embed_remote needs at least one text");

  const std::size_t n_batches = (texts.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<detail::BatchResult> results(n_batches);

  auto run_batch = [&](std::size_t b) {
    const auto first = texts.begin() + static_cast<std::ptrdiff_t>(b * cfg.batch_size);
    const auto last = texts.begin() + static_cast<std::ptrdiff_t>(
                                          std::min(texts.size(), (b + 1) * cfg.batch_size));
    const std::vector<std::string> chunk(first, last);
    for (int attempt = 0;; ++attempt) {
      try {
        return detail::embed_batch_once(cfg, chunk, b);
      } catch (const EmbedError& e) {
        const bool retryable = e.kind() == EmbedError::Kind::kTransport ||
                               e.kind() == EmbedError::Kind::kTimeout ||
                               e.kind() == EmbedError::Kind::kStatus;
        if (!retryable || attempt >= cfg.max_retries) throw;
      }
    }
  };

  for (std::size_t wave = 0; wave < n_batches; wave += cfg.parallelism) {
    const std::size_t end = std::min(n_batches, wave + cfg.parallelism);
    if (end - wave == 1) {
      results[wave] = run_batch(wave);
      continue;
    }
    std::vector<std::future<detail::BatchResult>> futures;
    for (std::size_t b = wave; b < end; ++b) {
      futures.push_back(std::async(std::launch::async, run_batch, b));
    }
    for (std::size_t b = wave; b < end; ++b) results[b] = futures[b - wave].get();
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const std::size_t d = results.front().dim;
  for (std::size_t b = 0; b < n_batches; ++b) {
    if (results[b].dim != d) {
      throw EmbedError(EmbedError::Kind::kDimensionMismatch, b,
                       "batch dim " + std::to_string(results[b].dim) + " vs batch 0 dim " +
                           std::to_string(d));
    }
    for (auto& v : results[b].vectors) out.push_back(std::move(v));
  }
  return out;
}

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EncoderEndpointConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
    auto out = embed_remote(texts, cfg_);
    if (dim_ == 0) dim_ = out.front().dim();
    if (out.front().dim() != dim_) {
      throw EmbedError(EmbedError::Kind::kDimensionMismatch, 0,
                       "service changed dimension from " + std::to_string(dim_));
    }
    return out;
  }

  // 0 until the first successful call.
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "remote"; }

 private:
  EncoderEndpointConfig cfg_;
  std::size_t dim_ = 0;
};

}  // namespace semrank
