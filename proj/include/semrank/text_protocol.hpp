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

// Parsing of the tagged generation format
//
//   <think>...</think><spiegazione>...</spiegazione><risposta>...</risposta>
//
// Tags are literal, case-sensitive and attribute-free. Only the first
// well-formed pair of each tag is extracted; a repeated pair marks the
// output as structurally invalid. Text inside a pair is content, so a pair
// crossing another one's boundary is not extracted.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "semrank/common.hpp"

namespace semrank {

struct TaggedOutput {
  std::optional<std::string> think;
  std::optional<std::string> spiegazione;
  std::optional<std::string> risposta;
  bool structurally_valid = false;

  bool operator==(const TaggedOutput&) const = default;
};

namespace detail {

inline constexpr std::array<std::string_view, 3> kTagNames = {"think", "spiegazione", "risposta"};

struct TagSpan {
  std::size_t open = std::string_view::npos;  // position of '<' of the open tag
  std::size_t inner_begin = 0;
  std::size_t inner_end = 0;
  std::size_t close_end = 0;  // one past the closing '>'
  bool found() const { return open != std::string_view::npos; }
};

// First open tag followed by a matching close tag. An open tag with no
// close after it contributes nothing, and neither do later open tags.
inline TagSpan find_pair(std::string_view text, std::string_view name,
                         std::size_t from = 0) {
  const std::string open = "<" + std::string(name) + ">";
  const std::string close = "</" + std::string(name) + ">";
  TagSpan span;
  const auto o = text.find(open, from);
  if (o == std::string_view::npos) return span;
  const auto c = text.find(close, o + open.size());
  if (c == std::string_view::npos) return span;
  span.open = o;
  span.inner_begin = o + open.size();
  span.inner_end = c;
  span.close_end = c + close.size();
  return span;
}

inline bool overlaps(const TagSpan& a, const TagSpan& b) {
  return a.open < b.close_end && b.open < a.close_end;
}


// Left-to-right scan for top-level pairs. Inside a pair only its own close
// tag is markup; an open tag with no close after it is plain text. Later
// pairs of an already captured tag set duplicate[k].
inline std::array<TagSpan, 3> scan_pairs(std::string_view text, std::array<bool, 3>& duplicate) {
  std::array<TagSpan, 3> spans;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best = std::string_view::npos;
    std::size_t which = kTagNames.size();
    for (std::size_t k = 0; k < kTagNames.size(); ++k) {
      const auto o = text.find("<" + std::string(kTagNames[k]) + ">", pos);
      if (o < best) {
        best = o;
        which = k;
      }
    }
    if (which == kTagNames.size()) break;
    const auto s = find_pair(text, kTagNames[which], best);
    if (!s.found()) {
      pos = best + 1;
      continue;
    }
    if (spans[which].found()) {
      duplicate[which] = true;
    } else {
      spans[which] = s;
    }
    pos = s.close_end;
  }
  return spans;
}

}  // namespace detail

inline TaggedOutput parse_tagged(std::string_view text) {
  TaggedOutput out;
  std::array<bool, 3> duplicate{};
  auto spans = detail::scan_pairs(text, duplicate);
  // A tag seen only nested inside another field is taken from the first
  // field, in template order, that contains a pair of it.
  const auto top = spans;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    if (spans[k].found()) continue;
    for (const auto& outer : top) {
      if (!outer.found()) continue;
      const auto inner = text.substr(outer.inner_begin, outer.inner_end - outer.inner_begin);
      auto s = detail::find_pair(inner, detail::kTagNames[k]);
      if (!s.found()) continue;
      s.open += outer.inner_begin;
      s.inner_begin += outer.inner_begin;
      s.inner_end += outer.inner_begin;
      s.close_end += outer.inner_begin;
      spans[k] = s;
      break;
    }
  }

  auto extract = [&](const detail::TagSpan& s) -> std::optional<std::string> {
    if (!s.found()) return std::nullopt;
    return std::string(text.substr(s.inner_begin, s.inner_end - s.inner_begin));
  };
  out.think = extract(spans[0]);
  out.spiegazione = extract(spans[1]);
  out.risposta = extract(spans[2]);
  // Duplicate required pairs are degenerate output.
  out.structurally_valid = spans[1].found() && spans[2].found() &&
                           !detail::overlaps(spans[1], spans[2]) && !duplicate[1] && !duplicate[2];
  return out;
}

// Inverse of parse_tagged for well-formed outputs. Absent fields are omitted.
inline std::string render_tagged(const TaggedOutput& out) {
  std::string s;
  if (out.think) s += "<think>" + *out.think + "</think>";
  if (out.spiegazione) s += "<spiegazione>" + *out.spiegazione + "</spiegazione>";
  if (out.risposta) s += "<risposta>" + *out.risposta + "</risposta>";
  return s;
}

// Trim, collapse internal whitespace runs to one space, ASCII case-fold.
inline std::string normalize_answer(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : trim_view(text)) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
  }
  return out;
}

}  // namespace semrank
