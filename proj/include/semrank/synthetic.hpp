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

// Synthetic Italian question/explanation/answer generator for desk-scale
// runs. Questions are small enough for the 16-token-context policy to learn:
// the facts an explanation needs sit within a few tokens of where they are
// used.

#pragma once

#include <string>
#include <vector>

#include <fmt/format.h>

#include "semrank/common.hpp"

namespace semrank::synthetic {

struct TaskItem {
  std::string id;
  std::string subject;
  int difficulty = 1;
  std::string question;   // short prompt text
  std::string rationale;  // reference explanation
  std::string answer;     // gold answer
  std::string note;       // short scratch note restating the operands
};

// Letter questions stay within a..j.
inline constexpr int kLetters = 10;

inline char letter(int i) { return static_cast<char>('a' + i); }

// One item of a randomly chosen kind.
inline TaskItem make_item(Rng& rng, std::size_t index) {
  TaskItem it;
  it.id = fmt::format("syn{:05d}", index);
  switch (rng.below(4)) {
    case 0: {
      const int x = static_cast<int>(rng.below(5));
      const int y = static_cast<int>(rng.below(5));
      it.subject = "matematica";
      it.difficulty = 1;
      it.question = fmt::format("quanto fa {}+{}?", x, y);
      it.rationale = fmt::format("sommo {} e {}: {}+{}={}.", x, y, x, y, x + y);
      it.answer = std::to_string(x + y);
      it.note = fmt::format("{}+{}", x, y);
      break;
    }
    case 1: {
      const int x = static_cast<int>(rng.below(5));
      it.subject = "fisica";
      it.difficulty = 2;
      it.question = fmt::format("doppio di {}?", x);
      it.rationale = fmt::format("il doppio di {} e {}+{}={}.", x, x, x, 2 * x);
      it.answer = std::to_string(2 * x);
      it.note = fmt::format("2*{}", x);
      break;
    }
    case 2: {
      const int c = static_cast<int>(rng.below(kLetters - 1));
      it.subject = "logica";
      it.difficulty = 2;
      it.question = fmt::format("lettera dopo {}?", letter(c));
      it.rationale = fmt::format("dopo {} viene {}.", letter(c), letter(c + 1));
      it.answer = std::string(1, letter(c + 1));
      it.note = fmt::format("dopo {}", letter(c));
      break;
    }
    default: {
      const int c = 1 + static_cast<int>(rng.below(kLetters - 1));
      it.subject = "logica";
      it.difficulty = 3;
      it.question = fmt::format("lettera prima di {}?", letter(c));
      it.rationale = fmt::format("prima di {} viene {}.", letter(c), letter(c - 1));
      it.answer = std::string(1, letter(c - 1));
      it.note = fmt::format("prima di {}", letter(c));
      break;
    }
  }
  return it;
}

inline std::vector<TaskItem> make_items(std::size_t n, std::uint64_t seed,
                                        std::size_t first_index = 0) {
  Rng rng(derive_seed(seed, "synthetic-items"));
  std::vector<TaskItem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_item(rng, first_index + i));
  return out;
}

inline std::string tagged_completion(const TaskItem& it, const std::string& think = "") {
  return "<think>" + think + "</think><spiegazione>" + it.rationale + "</spiegazione><risposta>" +
         it.answer + "</risposta>";
}

// Plain-text "textbook" paragraphs restating the facts the items test.
inline std::vector<std::string> textbook_paragraphs(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "synthetic-textbook"));
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string p;
    const std::size_t sentences = 3 + rng.below(4);
    for (std::size_t s = 0; s < sentences; ++s) {
      if (!p.empty()) p += ' ';
      const int x = static_cast<int>(rng.below(5));
      const int y = static_cast<int>(rng.below(5));
      const int c = static_cast<int>(rng.below(kLetters - 1));
      switch (rng.below(4)) {
        case 0: p += fmt::format("sommo {} e {}: {}+{}={}.", x, y, x, y, x + y); break;
        case 1: p += fmt::format("il doppio di {} e {}+{}={}.", x, x, x, 2 * x); break;
        case 2: p += fmt::format("dopo {} viene {}.", letter(c), letter(c + 1)); break;
        default: p += fmt::format("prima di {} viene {}.", letter(c + 1), letter(c)); break;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace semrank::synthetic
