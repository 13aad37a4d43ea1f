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

// Corpus and Q&A preparation: cleaning, paragraph dedup, overlapping token
// windows, item filtering, stratified splits and instruction formatting.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "semrank/common.hpp"
#include "semrank/text_protocol.hpp"
#include "semrank/vocab.hpp"

namespace semrank {

// ---------------------------------------------------------------------------
// Cleaning

namespace detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline const std::map<std::string, std::uint32_t>& named_entities() {
  static const std::map<std::string, std::uint32_t> table = {
      {"amp", '&'},     {"lt", '<'},       {"gt", '>'},       {"quot", '"'},
      {"apos", '\''},   {"nbsp", 0xA0},    {"agrave", 0xE0},  {"aacute", 0xE1},
      {"egrave", 0xE8}, {"eacute", 0xE9},  {"igrave", 0xEC},  {"iacute", 0xED},
      {"ograve", 0xF2}, {"oacute", 0xF3},  {"ugrave", 0xF9},  {"uacute", 0xFA},
      {"Agrave", 0xC0}, {"Egrave", 0xC8},  {"Eacute", 0xC9},  {"Igrave", 0xCC},
      {"Ograve", 0xD2}, {"Ugrave", 0xD9},  {"laquo", 0xAB},   {"raquo", 0xBB},
      {"deg", 0xB0},    {"middot", 0xB7},  {"times", 0xD7},   {"divide", 0xF7},
      {"ndash", 0x2013}, {"mdash", 0x2014}, {"hellip", 0x2026}, {"euro", 0x20AC},
      {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D},
  };
  return table;
}

}  // namespace detail

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    const std::string name(s.substr(i + 1, semi - i - 1));
    std::optional<std::uint32_t> cp;
    if (!name.empty() && name[0] == '#') {
      try {
        const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
        const auto digits = name.substr(hex ? 2 : 1);
        if (!digits.empty()) {
          std::size_t used = 0;
          const auto v = std::stoul(digits, &used, hex ? 16 : 10);
          if (used == digits.size() && v < 0x110000) cp = static_cast<std::uint32_t>(v);
        }
      } catch (const std::exception&) {
      }
    } else if (auto it = detail::named_entities().find(name); it != detail::named_entities().end()) {
      cp = it->second;
    }
    if (!cp) {
      out.push_back(s[i++]);
      continue;
    }
    detail::append_utf8(out, *cp);
    i = semi + 1;
  }
  return out;
}

// OCR / typesetting substitution table applied by clean_text.
inline const std::vector<std::pair<std::string, std::string>>& ocr_substitutions() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"\xEF\xAC\x80", "ff"},   // U+FB00
      {"\xEF\xAC\x81", "fi"},   // U+FB01
      {"\xEF\xAC\x82", "fl"},   // U+FB02
      {"\xEF\xAC\x83", "ffi"},  // U+FB03
      {"\xEF\xAC\x84", "ffl"},  // U+FB04
      {"\xC2\xAD", ""},         // soft hyphen
      {"\xC2\xA0", " "},        // no-break space
      {"\r\n", "\n"},
      {"\r", "\n"},
      {"\t", " "},
  };
  return table;
}

struct CleanConfig {
  bool strip_html = true;
  bool apply_ocr_table = true;
  // Lines like "42", "- 42 -", "pag. 42", "12/300".
  bool drop_page_numbers = true;
  // Lines matching any of these (ECMAScript, case-insensitive) are dropped.
  std::vector<std::string> header_patterns;
  // Short lines repeated at least this many times in one document are
  // treated as running headers/footers. 0 disables.
  std::size_t repeated_line_min = 3;
  std::size_t repeated_line_max_chars = 80;
};

inline bool is_page_number_line(std::string_view line) {
  static const std::regex re(
      R"(^\s*(?:(?:pag\.?|pagina|p\.)\s*)?-?\s*\d{1,4}\s*-?\s*(?:/\s*\d{1,4})?\s*$)",
      std::regex::icase | std::regex::optimize);
  return std::regex_match(line.begin(), line.end(), re);
}

inline std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '\n') {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

inline std::string clean_text(std::string_view raw, const CleanConfig& cfg = {}) {
  std::string s(raw);
  if (cfg.apply_ocr_table) {
    for (const auto& [from, to] : ocr_substitutions()) {
      std::string next;
      std::size_t pos = 0;
      while (true) {
        const auto hit = s.find(from, pos);
        if (hit == std::string::npos) break;
        next.append(s, pos, hit - pos);
        next += to;
        pos = hit + from.size();
      }
      next.append(s, pos);
      s = std::move(next);
    }
  }
  if (cfg.strip_html) {
    static const std::regex block(R"(<\s*(?:br|/p|p|/div|div|/li|li|/h[1-6]|h[1-6]|/tr|tr)\b[^>]*>)",
                                  std::regex::icase);
    static const std::regex tag(R"(<[^<>]*>)");
    s = std::regex_replace(s, block, "\n");
    s = std::regex_replace(s, tag, "");
    s = decode_entities(s);
    // A decoded &nbsp; is U+00A0.
    if (cfg.apply_ocr_table) {
      std::string t;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.compare(i, 2, "\xC2\xA0") == 0) {
          t.push_back(' ');
          ++i;
        } else {
          t.push_back(s[i]);
        }
      }
      s = std::move(t);
    }
  }

  auto lines = split_lines(s);
  std::vector<std::regex> headers;
  for (const auto& p : cfg.header_patterns) {
    headers.emplace_back(p, std::regex::icase | std::regex::ECMAScript);
  }
  std::unordered_map<std::string, std::size_t> counts;
  if (cfg.repeated_line_min > 0) {
    for (const auto& l : lines) {
      const auto t = trim(l);
      if (!t.empty() && t.size() <= cfg.repeated_line_max_chars) ++counts[t];
    }
  }

  std::vector<std::string> kept;
  for (auto& l : lines) {
    l = rtrim(l);
    const auto t = trim(l);
    if (!t.empty()) {
      if (cfg.drop_page_numbers && is_page_number_line(t)) continue;
      if (std::any_of(headers.begin(), headers.end(),
                      [&](const std::regex& re) { return std::regex_search(t, re); })) {
        continue;
      }
      if (cfg.repeated_line_min > 0) {
        const auto it = counts.find(t);
        if (it != counts.end() && it->second >= cfg.repeated_line_min) continue;
      }
    }
    kept.push_back(std::move(l));
  }

  // Blank-line runs collapse to one blank line; leading/trailing blanks go.
  std::string out;
  bool pending_blank = false;
  for (const auto& l : kept) {
    if (trim_view(l).empty()) {
      pending_blank = !out.empty();
      continue;
    }
    if (!out.empty()) out += pending_blank ? "\n\n" : "\n";
    pending_blank = false;
    out += l;
  }
  return out;
}

// Paragraphs are separated by one or more blank lines.
inline std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (const auto& l : split_lines(text)) {
    if (trim_view(l).empty()) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    if (!cur.empty()) cur += '\n';
    cur += l;
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// ---------------------------------------------------------------------------
// Deduplication

// Lower-cased (ASCII) words, whitespace collapsed.
inline std::vector<std::string> normalized_words(std::string_view p) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : p) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// Hashed word n-gram shingles. Texts shorter than n words give one shingle
// over all their words.
inline std::vector<std::uint64_t> shingles(const std::vector<std::string>& words, std::size_t n = 5) {
  std::vector<std::uint64_t> out;
  if (words.empty()) return out;
  auto hash_range = [&](std::size_t b, std::size_t e) {
    std::uint64_t h = kFnvOffset;
    for (std::size_t i = b; i < e; ++i) {
      h = fnv1a64(words[i], h);
      h = fnv1a64(std::string_view("\x1f", 1), h);
    }
    return h;
  };
  if (words.size() < n) {
    out.push_back(hash_range(0, words.size()));
  } else {
    for (std::size_t i = 0; i + n <= words.size(); ++i) out.push_back(hash_range(i, i + n));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline double jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

struct DedupConfig {
  double threshold = 0.9;
  std::size_t shingle_size = 5;
};

struct DedupDecision {
  std::size_t index = 0;
  std::size_t duplicate_of = 0;  // index of the earlier survivor
  bool exact = false;
  double similarity = 1.0;
};

struct DedupResult {
  std::vector<std::string> kept;
  std::vector<std::size_t> kept_indices;
  std::vector<DedupDecision> removed;
};

// Sequential definition: a paragraph survives unless it equals (after
// normalization) or is near (shingle Jaccard >= threshold) an earlier
// survivor. An inverted shingle index limits the comparisons.
inline DedupResult dedup_paragraphs(const std::vector<std::string>& paragraphs,
                                    const DedupConfig& cfg = {}) {
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) {
    throw ValidationError("dedup threshold must be in (0, 1]");
  }
  if (cfg.shingle_size == 0) throw ValidationError("shingle size must be >= 1");
  DedupResult res;
  std::unordered_map<std::string, std::size_t> exact;
  std::vector<std::vector<std::uint64_t>> survivor_shingles;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;  // shingle -> survivor slot

  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    const auto words = normalized_words(paragraphs[i]);
    std::string key;
    for (const auto& w : words) {
      if (!key.empty()) key += ' ';
      key += w;
    }
    if (auto it = exact.find(key); it != exact.end()) {
      res.removed.push_back({i, res.kept_indices[it->second], true, 1.0});
      continue;
    }
    auto sh = shingles(words, cfg.shingle_size);
    std::unordered_map<std::size_t, std::size_t> overlap;
    for (auto h : sh) {
      if (auto it = index.find(h); it != index.end()) {
        for (auto slot : it->second) ++overlap[slot];
      }
    }
    std::optional<std::pair<std::size_t, double>> best;
    for (const auto& [slot, inter] : overlap) {
      const double j = static_cast<double>(inter) /
                       static_cast<double>(sh.size() + survivor_shingles[slot].size() - inter);
      if (j >= cfg.threshold && (!best || slot < best->first)) best = {slot, j};
    }
    if (best) {
      res.removed.push_back({i, res.kept_indices[best->first], false, best->second});
      continue;
    }
    const std::size_t slot = res.kept.size();
    exact.emplace(std::move(key), slot);
    for (auto h : sh) index[h].push_back(slot);
    survivor_shingles.push_back(std::move(sh));
    res.kept.push_back(paragraphs[i]);
    res.kept_indices.push_back(i);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Tokenizing and chunking

// Words and single punctuation marks; ids are hashed into 2^20 buckets of the
// lower-cased token. Decoding yields "#id" placeholders joined by spaces.
class WordPunctTokenizer final : public Tokenizer {
 public:
  static constexpr std::size_t kBuckets = std::size_t{1} << 20;

  TokenizedText encode_with_spans(std::string_view text) const override {
    TokenizedText out;
    std::size_t i = 0;
    while (i < text.size()) {
      const auto c = static_cast<unsigned char>(text[i]);
      if (std::isspace(c)) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      if (!(c < 0x80 && std::ispunct(c))) {
        while (j < text.size()) {
          const auto d = static_cast<unsigned char>(text[j]);
          if (std::isspace(d) || (d < 0x80 && std::ispunct(d))) break;
          ++j;
        }
      }
      std::string lower(text.substr(i, j - i));
      for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      out.ids.push_back(static_cast<TokenId>(fnv1a64(lower) % kBuckets));
      out.spans.emplace_back(i, j);
      i = j;
    }
    return out;
  }

  std::string decode(std::span<const TokenId> ids) const override {
    std::string s;
    for (auto id : ids) {
      if (!s.empty()) s += ' ';
      s += fmt::format("#{}", id);
    }
    return s;
  }

  std::size_t vocab_size() const override { return kBuckets; }
};

struct CorpusChunk {
  std::vector<TokenId> tokens;
  std::string source_title;
  std::size_t chunk_index = 0;
  std::size_t token_start = 0;
  // Byte span in the source text.
  std::pair<std::size_t, std::size_t> char_span{0, 0};
};

// Windows start at multiples of window - overlap; the last one may be short.
inline std::vector<CorpusChunk> chunk_tokens(const TokenizedText& text, const std::string& title,
                                             std::size_t window, std::size_t overlap) {
  if (window == 0) throw ValidationError("chunk window must be > 0");
  if (overlap >= window) throw ValidationError("chunk overlap must be smaller than the window");
  if (text.spans.size() != text.ids.size()) throw Error("token spans and ids differ in length");
  const std::size_t stride = window - overlap;
  const std::size_t n = text.ids.size();
  std::vector<CorpusChunk> out;
  for (std::size_t start = 0; start < n; start += stride) {
    const std::size_t end = std::min(n, start + window);
    CorpusChunk c;
    c.tokens.assign(text.ids.begin() + static_cast<std::ptrdiff_t>(start),
                    text.ids.begin() + static_cast<std::ptrdiff_t>(end));
    c.source_title = title;
    c.chunk_index = out.size();
    c.token_start = start;
    c.char_span = {text.spans[start].first, text.spans[end - 1].second};
    out.push_back(std::move(c));
    if (end == n) break;
  }
  return out;
}

// Convenience for plain token-id sequences without source spans.
inline std::vector<CorpusChunk> chunk_tokens(const std::vector<TokenId>& ids,
                                             const std::string& title, std::size_t window,
                                             std::size_t overlap) {
  TokenizedText t;
  t.ids = ids;
  t.spans.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) t.spans.emplace_back(i, i + 1);
  return chunk_tokens(t, title, window, overlap);
}

// ---------------------------------------------------------------------------
// Q&A items

struct QaOption {
  std::string label;
  std::string text;
  bool operator==(const QaOption&) const = default;
};

struct QaItem {
  std::string id;
  std::string question;
  std::vector<QaOption> options;
  std::string answer;  // option label
  std::string rationale;
  std::string subject;
  std::string topic;
  std::string subtopic;
  int difficulty = 1;
  bool operator==(const QaItem&) const = default;
};

inline std::optional<std::string> item_invariant_error(const QaItem& it) {
  if (it.difficulty < 1 || it.difficulty > 3) return "difficulty out of range";
  if (it.options.empty()) {
    if (trim_view(it.answer).empty()) return "missing answer";
    return std::nullopt;
  }
  for (const auto& o : it.options) {
    if (o.label == it.answer) return std::nullopt;
  }
  return "answer is not an option label";
}

inline nlohmann::json to_json(const QaItem& it) {
  nlohmann::json opts = nlohmann::json::array();
  for (const auto& o : it.options) opts.push_back({{"label", o.label}, {"text", o.text}});
  return {{"id", it.id},           {"question", it.question}, {"options", opts},
          {"answer", it.answer},   {"rationale", it.rationale}, {"subject", it.subject},
          {"topic", it.topic},     {"subtopic", it.subtopic}, {"difficulty", it.difficulty}};
}

inline QaItem qa_item_from_json(const nlohmann::json& j) {
  QaItem it;
  it.id = j.at("id").get<std::string>();
  it.question = j.value("question", std::string());
  if (j.contains("options")) {
    for (const auto& o : j.at("options")) {
      it.options.push_back({o.at("label").get<std::string>(), o.value("text", std::string())});
    }
  }
  it.answer = j.value("answer", std::string());
  it.rationale = j.value("rationale", std::string());
  it.subject = j.value("subject", std::string());
  it.topic = j.value("topic", std::string());
  it.subtopic = j.value("subtopic", std::string());
  it.difficulty = j.value("difficulty", 1);
  return it;
}

enum class RejectReason { kInvalid, kImage, kMissingRationale, kBriefRationale };

inline std::string to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kInvalid: return "invalid";
    case RejectReason::kImage: return "image";
    case RejectReason::kMissingRationale: return "missing_rationale";
    case RejectReason::kBriefRationale: return "brief_rationale";
  }
  return "?";
}

struct Rejection {
  std::string item_id;
  RejectReason reason;
  std::string detail;
};

struct FilterConfig {
  // Minimum rationale length in code points, after clean_text.
  std::size_t min_rationale_chars = 120;
  // Image references (ECMAScript, case-insensitive) in question, options or
  // rationale.
  std::vector<std::string> image_patterns = {R"(\bfigur[ae]\b)", R"(\bimmagin[ei]\b)", R"(<\s*img\b)",
                                             R"(!\[[^\]]*\]\()"};
};

struct FilterResult {
  std::vector<QaItem> kept;
  std::vector<Rejection> rejected;
};

// Checks run in order invalid, image, missing, brief; the first hit is the
// logged reason.
inline FilterResult filter_items(const std::vector<QaItem>& items, const FilterConfig& cfg = {}) {
  std::vector<std::regex> image;
  for (const auto& p : cfg.image_patterns) image.emplace_back(p, std::regex::icase);
  auto mentions_image = [&](const std::string& s) {
    return std::any_of(image.begin(), image.end(),
                       [&](const std::regex& re) { return std::regex_search(s, re); });
  };
  CleanConfig cc;
  cc.repeated_line_min = 0;
  cc.drop_page_numbers = false;
  FilterResult res;
  for (const auto& it : items) {
    if (auto err = item_invariant_error(it)) {
      res.rejected.push_back({it.id, RejectReason::kInvalid, *err});
      continue;
    }
    bool img = mentions_image(it.question) || mentions_image(it.rationale);
    for (const auto& o : it.options) img = img || mentions_image(o.text);
    if (img) {
      res.rejected.push_back({it.id, RejectReason::kImage, "image reference"});
      continue;
    }
    const auto cleaned = clean_text(it.rationale, cc);
    if (trim_view(cleaned).empty()) {
      res.rejected.push_back({it.id, RejectReason::kMissingRationale, "empty rationale"});
      continue;
    }
    const auto len = utf8_length(cleaned);
    if (len < cfg.min_rationale_chars) {
      res.rejected.push_back({it.id, RejectReason::kBriefRationale,
                              fmt::format("{} < {} characters", len, cfg.min_rationale_chars)});
      continue;
    }
    res.kept.push_back(it);
  }
  return res;
}

inline std::string rejections_csv(const std::vector<Rejection>& rs) {
  std::string out = "item_id,reason,detail\n";
  for (const auto& r : rs) {
    std::string detail = r.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    out += fmt::format("{},{},{}\n", r.item_id, to_string(r.reason), detail);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;

  void validate() const {
    if (train < 0.0 || dev < 0.0 || test < 0.0) throw ValidationError("split ratios must be >= 0");
    if (std::abs(train + dev + test - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");
  }
};

// Largest-remainder apportionment of n; remainder ties go to train, then dev,
// then test.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& r) {
  const std::array<double, 3> ratios = {r.train, r.dev, r.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double q = static_cast<double>(n) * ratios[i];
    const double fl = std::floor(q + 1e-9);
    counts[i] = static_cast<std::size_t>(fl);
    rem[i] = std::max(0.0, q - fl);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-9; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++counts[order[k]];
  return counts;
}

struct SplitResult {
  std::vector<QaItem> train;
  std::vector<QaItem> dev;
  std::vector<QaItem> test;
};

// Strata (subject, difficulty) in key order; each is shuffled with its own
// derived seed and apportioned independently.
inline SplitResult stratified_split(const std::vector<QaItem>& items, const SplitRatios& ratios,
                                    std::uint64_t seed) {
  ratios.validate();
  std::map<std::pair<std::string, int>, std::vector<const QaItem*>> strata;
  for (const auto& it : items) strata[{it.subject, it.difficulty}].push_back(&it);
  SplitResult res;
  for (auto& [key, members] : strata) {
    Rng rng(derive_seed(seed, fmt::format("split/{}/{}", key.first, key.second)));
    rng.shuffle(members);
    const auto counts = apportion(members.size(), ratios);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) res.train.push_back(*members[pos++]);
    for (std::size_t i = 0; i < counts[1]; ++i) res.dev.push_back(*members[pos++]);
    for (std::size_t i = 0; i < counts[2]; ++i) res.test.push_back(*members[pos++]);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Instruction formatting

inline constexpr std::string_view kInstructionHeader =
    "Rispondi alla seguente domanda. Ragiona tra <think> e </think>, spiega la soluzione tra "
    "<spiegazione> e </spiegazione> e scrivi la risposta finale tra <risposta> e </risposta>.";

struct Instruction {
  std::string prompt;
  std::string completion;
};

// prompt:
//   {header}\n\nDomanda: {question}\n[Opzioni:\n{label}) {text}\n...]Risposta:
// completion:
//   <think></think><spiegazione>{rationale}</spiegazione><risposta>{label}</risposta>
inline Instruction to_instruction(const QaItem& it) {
  Instruction ins;
  ins.prompt = std::string(kInstructionHeader);
  ins.prompt += "\n\nDomanda: ";
  ins.prompt += it.question;
  ins.prompt += '\n';
  if (!it.options.empty()) {
    ins.prompt += "Opzioni:\n";
    for (const auto& o : it.options) ins.prompt += fmt::format("{}) {}\n", o.label, o.text);
  }
  ins.prompt += "Risposta:";
  TaggedOutput t;
  t.think = "";
  t.spiegazione = it.rationale;
  t.risposta = it.answer;
  ins.completion = render_tagged(t);
  return ins;
}

// ---------------------------------------------------------------------------
// JSON-lines I/O

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim_view(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: invalid JSON: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

inline std::string to_jsonl(const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<QaItem> read_qa_items(const std::filesystem::path& path) {
  std::vector<QaItem> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      out.push_back(qa_item_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("{}: bad item: {}", path.string(), e.what()));
    }
  }
  return out;
}

// Split files carry the item fields plus its instruction prompt/completion.
inline std::string qa_items_jsonl(const std::vector<QaItem>& items) {
  std::vector<nlohmann::json> rows;
  for (const auto& it : items) {
    auto j = to_json(it);
    const auto ins = to_instruction(it);
    j["prompt"] = ins.prompt;
    j["completion"] = ins.completion;
    rows.push_back(std::move(j));
  }
  return to_jsonl(rows);
}

inline nlohmann::json to_json(const CorpusChunk& c, std::string_view source_text = {}) {
  nlohmann::json j = {{"tokens", c.tokens},
                      {"source_title", c.source_title},
                      {"chunk_index", c.chunk_index},
                      {"char_span", {c.char_span.first, c.char_span.second}}};
  if (!source_text.empty()) {
    j["text"] = std::string(source_text.substr(c.char_span.first,
                                               c.char_span.second - c.char_span.first));
  }
  return j;
}

}  // namespace semrank
