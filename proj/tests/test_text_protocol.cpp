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

#include <gtest/gtest.h>

#include "semrank/common.hpp"
#include "semrank/text_protocol.hpp"

namespace semrank {
namespace {

TEST(ParseTagged, WellFormed) {
  const auto t = parse_tagged("<think>t</think><spiegazione>E</spiegazione><risposta>B</risposta>");
  EXPECT_EQ(t.think, "t");
  EXPECT_EQ(t.spiegazione, "E");
  EXPECT_EQ(t.risposta, "B");
  EXPECT_TRUE(t.structurally_valid);
}

TEST(ParseTagged, EmptyInput) {
  const auto t = parse_tagged("");
  EXPECT_FALSE(t.think);
  EXPECT_FALSE(t.spiegazione);
  EXPECT_FALSE(t.risposta);
  EXPECT_FALSE(t.structurally_valid);
}

TEST(ParseTagged, MissingAnswer) {
  const auto t = parse_tagged("<spiegazione>E</spiegazione>");
  EXPECT_EQ(t.spiegazione, "E");
  EXPECT_FALSE(t.risposta);
  EXPECT_FALSE(t.structurally_valid);
}

TEST(ParseTagged, DuplicatePairTakesFirstAndInvalidates) {
  const auto t = parse_tagged(
      "<spiegazione>uno</spiegazione><spiegazione>due</spiegazione><risposta>A</risposta>");
  EXPECT_EQ(t.spiegazione, "uno");
  EXPECT_FALSE(t.structurally_valid);
}

TEST(ParseTagged, UnclosedTagGivesNoField) {
  const auto t = parse_tagged("<think>abc<spiegazione>E</spiegazione><risposta>A</risposta>");
  EXPECT_FALSE(t.think);
  EXPECT_TRUE(t.structurally_valid);
}

TEST(ParseTagged, CaseSensitive) {
  const auto t = parse_tagged("<Spiegazione>E</Spiegazione><risposta>A</risposta>");
  EXPECT_FALSE(t.spiegazione);
  EXPECT_FALSE(t.structurally_valid);
}

TEST(ParseTagged, OverlappingPairsAreInvalid) {
  const auto t = parse_tagged("<spiegazione>a<risposta>B</spiegazione></risposta>");
  EXPECT_FALSE(t.structurally_valid);
}

std::string random_text(Rng& rng, std::size_t n) {
  static const std::vector<std::string> atoms = {"a", "b", " ", "<", ">", "/", "x", "\n",
                                                 "<think>", "</think>", "<spiegazione>",
                                                 "</spiegazione>", "<risposta>", "</risposta>"};
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += atoms[rng.below(atoms.size())];
  return s;
}

std::string random_plain(Rng& rng, std::size_t n) {
  static const std::string chars = "abc xyz<>/.\n";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += chars[rng.below(chars.size())];
  return s;
}

TEST(ParseTagged, ReserializeReparseIsStable) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto first = parse_tagged(random_text(rng, rng.below(20)));
    const auto second = parse_tagged(render_tagged(first));
    EXPECT_EQ(first.think, second.think);
    EXPECT_EQ(first.spiegazione, second.spiegazione);
    EXPECT_EQ(first.risposta, second.risposta);
  }
}

TEST(ParseTagged, SinglePairContentIsExactSubstring) {
  Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    std::string a = random_plain(rng, rng.below(12));
    std::string b = random_plain(rng, rng.below(12));
    std::string c = random_plain(rng, rng.below(12));
    // Keep the payloads tag-free so there is exactly one pair per tag.
    for (auto* s : {&a, &b, &c}) std::replace(s->begin(), s->end(), '<', '[');
    const auto t = parse_tagged("pre<think>" + a + "</think>mid<spiegazione>" + b +
                                "</spiegazione><risposta>" + c + "</risposta>post");
    EXPECT_EQ(t.think, a);
    EXPECT_EQ(t.spiegazione, b);
    EXPECT_EQ(t.risposta, c);
    EXPECT_TRUE(t.structurally_valid);
  }
}

TEST(ParseTagged, OrderNestingAndCrossing) {
  const auto a = parse_tagged("<risposta>B</risposta> e poi <spiegazione>E</spiegazione>");
  EXPECT_EQ(a.risposta, "B");
  EXPECT_EQ(a.spiegazione, "E");
  EXPECT_TRUE(a.structurally_valid);
  const auto n = parse_tagged("<think>a<risposta>b</risposta>c</think><spiegazione>E</spiegazione>");
  EXPECT_EQ(n.think, "a<risposta>b</risposta>c");
  EXPECT_EQ(n.risposta, "b");
  const auto x = parse_tagged("<think>a<risposta>b</think>c</risposta>");
  EXPECT_EQ(x.think, "a<risposta>b");
  EXPECT_FALSE(x.risposta.has_value());
  const auto d = parse_tagged("<spiegazione>E</spiegazione><risposta>B</risposta><risposta>C</risposta>");
  EXPECT_EQ(d.risposta, "B");
  EXPECT_FALSE(d.structurally_valid);
  const auto u = parse_tagged("<think>x <spiegazione>E</spiegazione><risposta>B</risposta>");
  EXPECT_FALSE(u.think.has_value());
  EXPECT_TRUE(u.structurally_valid);
}

TEST(NormalizeAnswer, Examples) {
  EXPECT_EQ(normalize_answer("  B "), "b");
  EXPECT_EQ(normalize_answer("B"), "b");
  EXPECT_EQ(normalize_answer("Risposta   C"), "risposta c");
}

TEST(NormalizeAnswer, Idempotent) {
  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    const auto x = random_plain(rng, rng.below(16)) + "\t AB C";
    EXPECT_EQ(normalize_answer(normalize_answer(x)), normalize_answer(x));
  }
}

}  // namespace
}  // namespace semrank
