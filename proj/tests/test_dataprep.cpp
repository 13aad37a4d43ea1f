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

#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "semrank/dataprep.hpp"

namespace semrank {
namespace {

std::string random_paragraph(Rng& rng, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += "w" + std::to_string(rng.below(5000));
  }
  return s;
}

// Direct set-based Jaccard on 5-word windows.
double jaccard_oracle(const std::string& a, const std::string& b) {
  auto grams = [](const std::string& t) {
    const auto w = normalized_words(t);
    std::set<std::string> out;
    for (std::size_t i = 0; i + 5 <= w.size(); ++i)
      out.insert(w[i] + " " + w[i + 1] + " " + w[i + 2] + " " + w[i + 3] + " " + w[i + 4]);
    return out;
  };
  const auto x = grams(a), y = grams(b);
  std::size_t inter = 0;
  for (const auto& g : x) inter += y.count(g);
  return static_cast<double>(inter) / static_cast<double>(x.size() + y.size() - inter);
}

QaItem item(std::string id, std::string subject, int difficulty, std::string rationale = std::string(130, 'r')) {
  QaItem it;
  it.id = std::move(id);
  it.question = "Quale valore? " + it.id;
  it.options = {{"A", "uno"}, {"B", "due"}};
  it.answer = "B";
  it.rationale = std::move(rationale);
  it.subject = std::move(subject);
  it.difficulty = difficulty;
  return it;
}

TEST(CleanText, Examples) {
  EXPECT_EQ(clean_text("<b>ciao</b>"), "ciao");
  EXPECT_EQ(clean_text("primo paragrafo\n\n42\n\nsecondo paragrafo"), "primo paragrafo\n\nsecondo paragrafo");
  const std::string clean = "Un paragrafo pulito.\nSeconda riga.\n\nAltro paragrafo.";
  EXPECT_EQ(clean_text(clean), clean);
  EXPECT_EQ(clean_text(clean_text("<p>a &amp; b</p>\n\n- 12 -\n\nc")), clean_text("<p>a &amp; b</p>\n\n- 12 -\n\nc"));
  EXPECT_EQ(clean_text("l&#39;acqua &egrave; H<sub>2</sub>O"), "l'acqua è H2O");
}

TEST(CleanText, PageNumberPatterns) {
  for (const char* s : {"42", "- 42 -", "pag. 42", "Pagina 7", "12/300", "  -3-  "}) EXPECT_TRUE(is_page_number_line(s)) << s;
  for (const char* s : {"42 gatti", "capitolo 3", "12345", "x"}) EXPECT_FALSE(is_page_number_line(s)) << s;
  CleanConfig off;
  off.drop_page_numbers = false;
  EXPECT_EQ(clean_text("a\n\n42\n\nb", off), "a\n\n42\n\nb");
}

TEST(CleanText, HeadersAndRepeatedLines) {
  CleanConfig cfg;
  cfg.header_patterns = {"^manuale di"};
  EXPECT_EQ(clean_text("Manuale di fisica\ntesto vero", cfg), "testo vero");
  const std::string doc = "Intestazione\nuno\n\nIntestazione\ndue\n\nIntestazione\ntre";
  EXPECT_EQ(clean_text(doc), "uno\n\ndue\n\ntre");
  cfg.repeated_line_min = 0;
  EXPECT_NE(clean_text(doc, cfg).find("Intestazione"), std::string::npos);
}

TEST(Dedup, Examples) {
  Rng rng(51);
  const auto p = random_paragraph(rng, 40), q = random_paragraph(rng, 40);
  EXPECT_EQ(dedup_paragraphs({p, p}).kept, std::vector<std::string>{p});
  EXPECT_EQ(dedup_paragraphs({p, q}).kept, (std::vector<std::string>{p, q}));
  EXPECT_EQ(dedup_paragraphs({p, "  " + p + "\n"}).kept.size(), 1u);

  auto words = normalized_words(random_paragraph(rng, 200));
  const auto join = [](const std::vector<std::string>& w) {
    std::string s;
    for (const auto& x : w) s += x + " ";
    return s;
  };
  const auto a = join(words);
  words[100] = "cambiata";
  const auto b = join(words);
  EXPECT_GT(jaccard_oracle(a, b), 0.9);
  EXPECT_NEAR(jaccard(shingles(normalized_words(a)), shingles(normalized_words(b))), jaccard_oracle(a, b), 1e-12);
  const auto r = dedup_paragraphs({a, b});
  EXPECT_EQ(r.kept.size(), 1u);
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_FALSE(r.removed[0].exact);
  EXPECT_EQ(r.removed[0].duplicate_of, 0u);
}

TEST(Dedup, InjectedNearDuplicatesAndIdempotence) {
  Rng rng(52);
  std::vector<std::string> paras;
  std::vector<bool> injected;
  for (int i = 0; i < 900; ++i) {
    // One changed word keeps 5-shingle Jaccard >= 0.9 only from about 100 words up.
    paras.push_back(random_paragraph(rng, 200 + rng.below(50)));
    injected.push_back(false);
  }
  for (int i = 0; i < 100; ++i) {
    auto w = normalized_words(paras[rng.below(900)]);
    w[rng.below(w.size())] = "modificata";
    std::string s;
    for (const auto& x : w) s += x + " ";
    // Appended after every source, so the source is always the survivor.
    paras.push_back(s);
    injected.push_back(true);
  }
  const auto r = dedup_paragraphs(paras);
  std::size_t removed_injected = 0, removed_clean = 0;
  for (const auto& d : r.removed) (injected[d.index] ? removed_injected : removed_clean)++;
  EXPECT_GE(removed_injected, 95u);
  EXPECT_EQ(removed_clean, 0u);
  EXPECT_EQ(dedup_paragraphs(r.kept).kept, r.kept);
}

TEST(Dedup, ThresholdValidation) {
  EXPECT_THROW(dedup_paragraphs({"a"}, DedupConfig{0.0, 5}), ValidationError);
  EXPECT_THROW(dedup_paragraphs({"a"}, DedupConfig{0.9, 0}), ValidationError);
}

TEST(Chunk, Examples) {
  std::vector<TokenId> ids(10000);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<TokenId>(i);
  const auto c = chunk_tokens(ids, "doc", 4096, 256);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].token_start, 0u);
  EXPECT_EQ(c[1].token_start, 3840u);
  EXPECT_EQ(c[2].token_start, 7680u);
  EXPECT_EQ(c[2].tokens.size(), 2320u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(c[i].chunk_index, i);
    EXPECT_EQ(c[i].source_title, "doc");
    EXPECT_LE(c[i].tokens.size(), 4096u);
  }
  EXPECT_EQ(chunk_tokens(std::vector<TokenId>(100, 1), "d", 4096, 256).size(), 1u);
  EXPECT_TRUE(chunk_tokens(std::vector<TokenId>{}, "d", 8, 2).empty());
  EXPECT_THROW(chunk_tokens(ids, "d", 10, 10), ValidationError);
  EXPECT_THROW(chunk_tokens(ids, "d", 0, 0), ValidationError);
}

TEST(Chunk, CoverageAndPartition) {
  Rng rng(53);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = rng.below(500), window = 1 + rng.below(64), overlap = rng.below(window);
    std::vector<TokenId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<TokenId>(i);
    const auto cs = chunk_tokens(ids, "d", window, overlap);
    std::vector<int> seen(n, 0);
    for (const auto& c : cs) {
      EXPECT_EQ(c.token_start % (window - overlap), 0u);
      for (auto id : c.tokens) ++seen[static_cast<std::size_t>(id)];
    }
    for (int s : seen) EXPECT_GE(s, 1);
    if (overlap == 0) {
      std::size_t total = 0;
      for (const auto& c : cs) total += c.tokens.size();
      EXPECT_EQ(total, n);
    }
  }
}

TEST(Chunk, CharSpansFollowSource) {
  const std::string text = "Il gatto, sul tetto.";
  WordPunctTokenizer tok;
  const auto tt = tok.encode_with_spans(text);
  ASSERT_EQ(tt.ids.size(), 6u);
  const auto cs = chunk_tokens(tt, "t", 4, 1);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(text.substr(cs[0].char_span.first, cs[0].char_span.second - cs[0].char_span.first), "Il gatto, sul");
  EXPECT_EQ(text.substr(cs[1].char_span.first, cs[1].char_span.second - cs[1].char_span.first), "sul tetto.");
  EXPECT_EQ(tok.encode("Gatto"), tok.encode("gatto"));
}

TEST(FilterItems, Examples) {
  std::vector<QaItem> items = {item("empty", "s", 1, ""), item("img", "s", 1), item("b119", "s", 1, std::string(119, 'x')),
                               item("b120", "s", 1, std::string(120, 'x')), item("fig", "s", 1, std::string(130, 'y') + " vedi figura 3")};
  items[1].question = "Guarda <img src=\"a.png\"> e rispondi";
  const auto r = filter_items(items);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].id, "b120");
  ASSERT_EQ(r.rejected.size(), 4u);
  EXPECT_EQ(r.rejected[0].reason, RejectReason::kMissingRationale);
  EXPECT_EQ(r.rejected[1].reason, RejectReason::kImage);
  EXPECT_EQ(r.rejected[2].reason, RejectReason::kBriefRationale);
  EXPECT_EQ(r.rejected[3].reason, RejectReason::kImage);
  EXPECT_EQ(rejections_csv(r.rejected).substr(0, 21), "item_id,reason,detail");
}

TEST(FilterItems, LengthCountsCodePointsAfterCleaning) {
  // 119 accented letters are 238 bytes but still too brief.
  std::string s;
  for (int i = 0; i < 119; ++i) s += "è";
  EXPECT_EQ(filter_items({item("x", "s", 1, s)}).rejected.size(), 1u);
  EXPECT_EQ(filter_items({item("x", "s", 1, "<b>" + std::string(118, 'a') + "</b>")}).rejected.size(), 1u);
  auto bad = item("x", "s", 4);
  EXPECT_EQ(filter_items({bad}).rejected[0].reason, RejectReason::kInvalid);
  bad = item("y", "s", 1);
  bad.answer = "Z";
  EXPECT_EQ(filter_items({bad}).rejected[0].reason, RejectReason::kInvalid);
}

TEST(Split, Examples) {
  auto make = [](std::size_t n) {
    std::vector<QaItem> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(item("i" + std::to_string(i), "fisica", 2));
    return v;
  };
  const auto r100 = stratified_split(make(100), SplitRatios{}, 1);
  EXPECT_EQ(r100.train.size(), 80u);
  EXPECT_EQ(r100.dev.size(), 10u);
  EXPECT_EQ(r100.test.size(), 10u);
  const auto r10 = stratified_split(make(10), SplitRatios{}, 1);
  EXPECT_EQ(r10.train.size() * 100 + r10.dev.size() * 10 + r10.test.size(), 811u);
  EXPECT_EQ(apportion(5, SplitRatios{}), (std::array<std::size_t, 3>{4, 1, 0}));
  EXPECT_THROW((SplitRatios{0.5, 0.2, 0.2}.validate()), ValidationError);
}

TEST(Split, PartitionPerStratumAndDeterminism) {
  std::vector<QaItem> items;
  Rng rng(54);
  for (int i = 0; i < 337; ++i) {
    items.push_back(item("i" + std::to_string(i), rng.coin() ? "fisica" : "chimica", 1 + static_cast<int>(rng.below(3))));
  }
  const auto a = stratified_split(items, SplitRatios{}, 7);
  const auto b = stratified_split(items, SplitRatios{}, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.size() + a.dev.size() + a.test.size(), items.size());
  std::set<std::string> ids;
  for (const auto* part : {&a.train, &a.dev, &a.test})
    for (const auto& it : *part) EXPECT_TRUE(ids.insert(it.id).second) << it.id;
  std::map<std::pair<std::string, int>, std::pair<int, int>> per;
  for (const auto& it : items) ++per[{it.subject, it.difficulty}].second;
  for (const auto& it : a.train) ++per[{it.subject, it.difficulty}].first;
  for (const auto& [k, v] : per) EXPECT_LE(std::abs(v.first - 0.8 * v.second), 1.0);
  EXPECT_NE(stratified_split(items, SplitRatios{}, 8).train, a.train);
}

TEST(Instruction, RoundTrip) {
  auto it = item("q", "s", 1, "Perché due è la risposta giusta.");
  const auto ins = to_instruction(it);
  const auto parsed = parse_tagged(ins.completion);
  EXPECT_TRUE(parsed.structurally_valid);
  EXPECT_EQ(parsed.risposta, "B");
  EXPECT_EQ(parsed.spiegazione, it.rationale);
  EXPECT_EQ(ins.completion, "<think></think><spiegazione>" + it.rationale + "</spiegazione><risposta>B</risposta>");
  EXPECT_NE(ins.prompt.find("A) uno"), std::string::npos);
  auto other = it;
  other.question = "Altra domanda";
  EXPECT_NE(to_instruction(other).prompt, ins.prompt);
}

TEST(QaItemJson, RoundTrip) {
  const auto it = item("q7", "biologia", 3);
  EXPECT_EQ(qa_item_from_json(to_json(it)), it);
}

}  // namespace
}  // namespace semrank
