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

// Word-level ROUGE-L. No stemming.

#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semrank/common.hpp"

namespace semrank {

inline bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

// Lower-cased tokens split on ASCII whitespace and ASCII punctuation.
inline std::vector<std::string> rouge_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c) || is_ascii_punct(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Length of the longest common subsequence, bit-parallel over the positions
// of `b` (Crochemore et al. row recurrence V' = (V + (V & M)) | (V & ~M)).
// Runs in O(|a| * |b| / 64).
template <typename T, typename Hash = std::hash<T>>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  const std::size_t m = b.size();
  if (a.empty() || m == 0) return 0;
  const std::size_t words = (m + 63) / 64;

  std::unordered_map<T, std::vector<std::uint64_t>, Hash> match;
  for (std::size_t j = 0; j < m; ++j) {
    auto& mask = match[b[j]];
    if (mask.empty()) mask.assign(words, 0);
    mask[j / 64] |= std::uint64_t{1} << (j % 64);
  }

  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  for (const auto& x : a) {
    const auto it = match.find(x);
    if (it == match.end()) continue;
    const auto& mk = it->second;
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & mk[w];
      const std::uint64_t sum = v[w] + u;
      const std::uint64_t c1 = sum < v[w] ? 1 : 0;
      const std::uint64_t sum2 = sum + carry;
      const std::uint64_t c2 = sum2 < sum ? 1 : 0;
      v[w] = sum2 | (v[w] & ~mk[w]);
      carry = c1 | c2;
    }
  }
  std::size_t zeros = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (((v[j / 64] >> (j % 64)) & 1U) == 0) ++zeros;
  }
  return zeros;
}

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t lcs = 0;
};

inline RougeScore rouge_l_tokens(const std::vector<std::string>& gen,
                                 const std::vector<std::string>& ref) {
  RougeScore s;
  if (gen.empty() || ref.empty()) return s;
  s.lcs = lcs_length(gen, ref);
  if (s.lcs == 0) return s;
  s.precision = static_cast<double>(s.lcs) / static_cast<double>(gen.size());
  s.recall = static_cast<double>(s.lcs) / static_cast<double>(ref.size());
  s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

inline double rouge_l_f1(std::string_view generated, std::string_view reference) {
  return rouge_l_tokens(rouge_tokenize(generated), rouge_tokenize(reference)).f1;
}

}  // namespace semrank
