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

// 64-symbol character vocabulary for the toy policy.
//
//   0 PAD   1 EOS   2 UNK
//   3..8    <think> </think> <spiegazione> </spiegazione> <risposta> </risposta>
//   9 ' '   10 '\n'
//   11..36  a..z            (upper case folded, Italian accents stripped)
//   37..46  0..9
//   47..62  . , ; : ? ! ' " ( ) - + = / * %
//   63 '#'
//
// Every other code point maps to UNK, which decodes to U+FFFD.

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semrank/common.hpp"

namespace semrank {

using TokenId = int;

struct TokenizedText {
  std::vector<TokenId> ids;
  // Byte span [first, second) of each token in the source text.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
};

// Anything that maps text to integer ids over a fixed vocabulary.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual TokenizedText encode_with_spans(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  virtual std::size_t vocab_size() const = 0;

  std::vector<TokenId> encode(std::string_view text) const {
    return encode_with_spans(text).ids;
  }
};

class CharVocab final : public Tokenizer {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kThinkOpen = 3;
  static constexpr TokenId kThinkClose = 4;
  static constexpr TokenId kExplOpen = 5;
  static constexpr TokenId kExplClose = 6;
  static constexpr TokenId kAnsOpen = 7;
  static constexpr TokenId kAnsClose = 8;
  static constexpr std::size_t kSize = 64;

  CharVocab() {
    byte_to_id_.fill(kUnk);
    auto set = [&](char c, TokenId id) {
      byte_to_id_[static_cast<unsigned char>(c)] = id;
      id_to_text_[static_cast<std::size_t>(id)] = std::string(1, c);
    };
    set(' ', 9);
    set('\n', 10);
    for (int i = 0; i < 26; ++i) {
      set(static_cast<char>('a' + i), 11 + i);
      byte_to_id_[static_cast<unsigned char>('A' + i)] = 11 + i;
    }
    for (int i = 0; i < 10; ++i) set(static_cast<char>('0' + i), 37 + i);
    constexpr std::string_view punct = ".,;:?!'\"()-+=/*%";
    for (std::size_t i = 0; i < punct.size(); ++i) set(punct[i], 47 + static_cast<TokenId>(i));
    set('#', 63);
    byte_to_id_[static_cast<unsigned char>('\t')] = 9;
    byte_to_id_[static_cast<unsigned char>('\r')] = 9;
    for (std::size_t i = 0; i < kTags.size(); ++i) {
      id_to_text_[3 + i] = std::string(kTags[i]);
    }
    id_to_text_[kUnk] = "\xEF\xBF\xBD";
  }

  std::size_t vocab_size() const override { return kSize; }

  TokenizedText encode_with_spans(std::string_view text) const override {
    TokenizedText out;
    std::size_t i = 0;
    while (i < text.size()) {
      if (text[i] == '<') {
        bool matched = false;
        for (std::size_t t = 0; t < kTags.size(); ++t) {
          if (text.substr(i, kTags[t].size()) == kTags[t]) {
            out.ids.push_back(3 + static_cast<TokenId>(t));
            out.spans.emplace_back(i, i + kTags[t].size());
            i += kTags[t].size();
            matched = true;
            break;
          }
        }
        if (matched) continue;
      }
      const auto c = static_cast<unsigned char>(text[i]);
      if (c < 0x80) {
        out.ids.push_back(byte_to_id_[c]);
        out.spans.emplace_back(i, i + 1);
        ++i;
        continue;
      }
      std::size_t len = 1;
      if ((c & 0xE0) == 0xC0) len = 2;
      else if ((c & 0xF0) == 0xE0) len = 3;
      else if ((c & 0xF8) == 0xF0) len = 4;
      len = std::min(len, text.size() - i);
      out.ids.push_back(fold_accent(text.substr(i, len)));
      out.spans.emplace_back(i, i + len);
      i += len;
    }
    return out;
  }

  std::string decode(std::span<const TokenId> ids) const override {
    std::string s;
    for (TokenId id : ids) {
      if (id == kPad || id == kEos) continue;
      if (id < 0 || static_cast<std::size_t>(id) >= kSize) {
        s += id_to_text_[kUnk];
        continue;
      }
      s += id_to_text_[static_cast<std::size_t>(id)];
    }
    return s;
  }

 private:
  static constexpr std::array<std::string_view, 6> kTags = {
      "<think>", "</think>", "<spiegazione>", "</spiegazione>", "<risposta>", "</risposta>"};

  // Latin-1 supplement vowels with accents fold to their base letter.
  TokenId fold_accent(std::string_view cp) const {
    if (cp.size() != 2 || static_cast<unsigned char>(cp[0]) != 0xC3) return kUnk;
    const auto lo = static_cast<unsigned char>(cp[1]);
    // U+00C0..U+00FF are encoded as C3 80..C3 BF.
    const unsigned code = 0xC0U + (lo - 0x80U);
    auto letter = [&](char l) { return byte_to_id_[static_cast<unsigned char>(l)]; };
    if ((code >= 0xC0 && code <= 0xC5) || (code >= 0xE0 && code <= 0xE5)) return letter('a');
    if ((code >= 0xC8 && code <= 0xCB) || (code >= 0xE8 && code <= 0xEB)) return letter('e');
    if ((code >= 0xCC && code <= 0xCF) || (code >= 0xEC && code <= 0xEF)) return letter('i');
    if ((code >= 0xD2 && code <= 0xD6) || (code >= 0xF2 && code <= 0xF6)) return letter('o');
    if ((code >= 0xD9 && code <= 0xDC) || (code >= 0xF9 && code <= 0xFC)) return letter('u');
    if (code == 0xC7 || code == 0xE7) return letter('c');
    if (code == 0xD1 || code == 0xF1) return letter('n');
    return kUnk;
  }

  std::array<TokenId, 128> byte_to_id_{};
  std::array<std::string, kSize> id_to_text_{};
};

}  // namespace semrank
