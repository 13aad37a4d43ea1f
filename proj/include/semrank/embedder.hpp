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

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "semrank/common.hpp"
#include "semrank/text_protocol.hpp"

namespace semrank {

class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  DimensionMismatchError(std::size_t a, std::size_t b)
      : Error("embedding dimension mismatch: " + std::to_string(a) + " vs " +
              std::to_string(b)) {}
};

// Dense vector representing a text. All entries are finite.
struct EmbeddingVector {
  std::vector<double> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> v) : values(std::move(v)) {
    for (double x : values) {
      if (!std::isfinite(x)) throw Error("embedding contains a non-finite value");
    }
  }

  std::size_t dim() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const EmbeddingVector&) const = default;
};

inline double dot(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) throw DimensionMismatchError(u.dim(), v.dim());
  double s = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) s += u.values[i] * v.values[i];
  return s;
}

inline double l2_norm(const EmbeddingVector& u) { return std::sqrt(dot(u, u)); }

// u.v / (|u| |v|), clamped to [-1, 1] against rounding drift.
inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) throw DimensionMismatchError(u.dim(), v.dim());
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw DegenerateVectorError("cosine of a zero-norm vector is undefined");
  }
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

namespace detail {

// Byte length of the UTF-8 sequence starting with lead byte c.
inline std::size_t utf8_seq_len(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) return 2;
  if ((c & 0xF0) == 0xE0) return 3;
  if ((c & 0xF8) == 0xF0) return 4;
  return 1;
}

}  // namespace detail

// Hashed character-trigram embedding, L2-normalized.
//
// The text is trimmed, whitespace runs are collapsed to single spaces, ASCII
// letters are lower-cased, and the result is padded with one space on each
// side. Every window of three consecutive code points is hashed with FNV-1a
// (64-bit) over its UTF-8 bytes and counted at index hash % d. Empty or
// all-whitespace text maps to the unit vector e_0.
inline EmbeddingVector embed_toy(std::string_view text, std::size_t d = 256) {
  if (d < 8) throw Error("toy embedder dimension must be at least 8");
  std::vector<double> v(d, 0.0);
  const std::string norm = normalize_answer(text);
  if (norm.empty()) {
    v[0] = 1.0;
    return EmbeddingVector(std::move(v));
  }
  const std::string padded = " " + norm + " ";
  std::vector<std::string_view> chars;
  for (std::size_t i = 0; i < padded.size();) {
    const std::size_t n =
        std::min(detail::utf8_seq_len(static_cast<unsigned char>(padded[i])),
                 padded.size() - i);
    chars.push_back(std::string_view(padded).substr(i, n));
    i += n;
  }
  for (std::size_t i = 0; i + 2 < chars.size(); ++i) {
    const std::size_t begin = static_cast<std::size_t>(chars[i].data() - padded.data());
    const std::size_t end =
        static_cast<std::size_t>(chars[i + 2].data() - padded.data()) + chars[i + 2].size();
    const std::uint64_t h = fnv1a64(std::string_view(padded).substr(begin, end - begin));
    v[h % d] += 1.0;
  }
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double n = std::sqrt(n2);
  for (double& x : v) x /= n;
  return EmbeddingVector(std::move(v));
}

// Something that turns texts into vectors of a fixed dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;

  EmbeddingVector embed_one(const std::string& text) {
    auto out = embed(std::vector<std::string>{text});
    return std::move(out.at(0));
  }
};

class ToyEmbedder final : public Embedder {
 public:
  explicit ToyEmbedder(std::size_t d = 256) : d_(d) {
    if (d_ < 8) throw Error("toy embedder dimension must be at least 8");
  }

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_toy(t, d_));
    return out;
  }
  std::size_t dim() const override { return d_; }
  std::string name() const override { return "toy"; }

 private:
  std::size_t d_;
};

// Component-wise mean of the vectors. Not re-normalized.
inline EmbeddingVector mean_vector(const std::vector<EmbeddingVector>& vs) {
  if (vs.empty()) throw Error("reference centroid needs at least one text");
  const std::size_t d = vs.front().dim();
  std::vector<double> acc(d, 0.0);
  for (const auto& v : vs) {
    if (v.dim() != d) throw DimensionMismatchError(d, v.dim());
    for (std::size_t i = 0; i < d; ++i) acc[i] += v.values[i];
  }
  for (double& x : acc) x /= static_cast<double>(vs.size());
  return EmbeddingVector(std::move(acc));
}

inline EmbeddingVector reference_centroid(const std::vector<std::string>& texts,
                                          Embedder& provider) {
  if (texts.empty()) throw Error("reference centroid needs at least one text");
  return mean_vector(provider.embed(texts));
}

// Seeded sample without replacement of up to n texts, in draw order.
inline std::vector<std::string> sample_reference_texts(
    const std::vector<std::string>& texts, std::size_t n = 256,
    std::uint64_t seed = 0) {
  std::vector<std::size_t> idx(texts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(derive_seed(seed, "reference-centroid"));
  rng.shuffle(idx);
  idx.resize(std::min(n, idx.size()));
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(texts[i]);
  return out;
}

}  // namespace semrank
