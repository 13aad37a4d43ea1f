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

// Stage drivers behind the command-line tool. Each one reads a RunConfig,
// writes its artifacts under cfg.out and echoes the config there as
// config.json, so a run can be repeated from that file alone.
//
// Artifacts per stage:
//   prepare   corpus.jsonl, dedup.csv, rejections.csv, train/dev/test.jsonl
//   cpt, sft  final.ckpt, metrics.csv (step,loss)
//   grpo      final.ckpt, metrics.csv, step{N}.ckpt when checkpoint_every > 0
//   ablate    ablation.csv, {optimizer}.ckpt
//   generate  {name}.jsonl with item_id, text, explanation, answer
//   score     rewards.csv
//   arena     ratings.csv, aggregate.csv, matches.csv

#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "semrank/arena.hpp"
#include "semrank/checkpoint.hpp"
#include "semrank/common.hpp"
#include "semrank/config.hpp"
#include "semrank/dataprep.hpp"
#include "semrank/embedder.hpp"
#include "semrank/judge_http.hpp"
#include "semrank/optim.hpp"
#include "semrank/policy.hpp"
#include "semrank/remote_embedder.hpp"
#include "semrank/report.hpp"
#include "semrank/rewards.hpp"
#include "semrank/synthetic.hpp"
#include "semrank/text_protocol.hpp"
#include "semrank/trainer.hpp"
#include "semrank/vocab.hpp"

namespace semrank::pipeline {

namespace fs = std::filesystem;

inline fs::path prepare_out_dir(const RunConfig& cfg) {
  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_file_bytes(out / "config.json", config_json(cfg).dump(2) + "\n");
  return out;
}

inline fs::path require_file(const std::string& path, std::string_view what) {
  if (path.empty()) throw ValidationError(fmt::format("{} is not set", what));
  if (!fs::is_regular_file(path)) throw ValidationError(fmt::format("{} not found: {}", what, path));
  return path;
}

inline fs::path require_dir(const std::string& path, std::string_view what) {
  if (path.empty()) throw ValidationError(fmt::format("{} is not set", what));
  if (!fs::is_directory(path)) throw ValidationError(fmt::format("{} not found: {}", what, path));
  return path;
}

// Config values win; the environment fills what the config leaves empty.
inline EncoderEndpointConfig encoder_endpoint(const EmbedderSection& s) {
  auto e = EncoderEndpointConfig::from_env();
  if (!s.url.empty()) e.base_url = s.url;
  e.timeout_seconds = s.timeout_seconds;
  e.batch_size = s.batch_size;
  e.max_retries = s.max_retries;
  e.parallelism = s.parallelism;
  return e;
}

inline JudgeEndpointConfig judge_endpoint(const JudgeSection& s) {
  auto e = JudgeEndpointConfig::from_env();
  if (!s.url.empty()) e.base_url = s.url;
  if (!s.model.empty()) e.model = s.model;
  e.timeout_seconds = s.timeout_seconds;
  e.max_retries = s.max_retries;
  return e;
}

inline std::unique_ptr<Embedder> make_embedder(const EmbedderSection& s) {
  if (s.kind == "toy") return std::make_unique<ToyEmbedder>(s.dim);
  if (s.kind == "remote") {
    auto e = encoder_endpoint(s);
    if (e.base_url.empty()) {
      throw ValidationError("remote embedder needs embedder.url or SEMRANK_EMBED_URL");
    }
    return std::make_unique<RemoteEmbedder>(e);
  }
  throw ValidationError("unknown embedder '" + s.kind + "' (expected toy or remote)");
}

// ---------------------------------------------------------------------------
// Synthetic inputs

// Four labelled options with the gold answer at a seeded position.
inline QaItem synthetic_qa_item(const synthetic::TaskItem& t, Rng& rng) {
  static constexpr std::string_view kLabels = "ABCD";
  QaItem q;
  q.id = t.id;
  q.question = t.question;
  q.subject = t.subject;
  q.difficulty = t.difficulty;
  q.topic = t.subject == "logica" ? "alfabeto" : "aritmetica";
  std::vector<std::string> texts = {t.answer};
  const bool numeric = std::isdigit(static_cast<unsigned char>(t.answer.front())) != 0;
  for (int d = 1; texts.size() < 4; ++d) {
    std::string alt;
    if (numeric) {
      alt = std::to_string(std::stoi(t.answer) + d);
    } else {
      alt = std::string(1, static_cast<char>('a' + (t.answer.front() - 'a' + d) % 26));
    }
    texts.push_back(alt);
  }
  const std::size_t gold = rng.below(4);
  std::swap(texts[0], texts[gold]);
  for (std::size_t i = 0; i < 4; ++i) q.options.push_back({std::string(1, kLabels[i]), texts[i]});
  q.answer = std::string(1, kLabels[gold]);
  q.rationale = t.rationale +
                " Il procedimento e diretto: si applica la regola vista nel capitolo e si confronta "
                "il risultato con le opzioni proposte.";
  return q;
}

struct SynthSummary {
  std::size_t items = 0;
  std::size_t documents = 0;
};

// A small noisy corpus (HTML tags, page numbers, running headers, repeated
// paragraphs) under dir/corpus and dir/items.jsonl. Every 10th item has a
// one-line rationale and every 17th cites a figure, so filtering has work
// to do.
inline SynthSummary write_synthetic_inputs(const fs::path& dir, std::uint64_t seed,
                                           std::size_t n_items = 300, std::size_t n_docs = 4,
                                           std::size_t paragraphs_per_doc = 40) {
  fs::create_directories(dir / "corpus");
  Rng rng(derive_seed(seed, "synth-inputs"));
  const auto paras = synthetic::textbook_paragraphs(n_docs * paragraphs_per_doc, seed);
  for (std::size_t d = 0; d < n_docs; ++d) {
    std::string doc = "<html><body>\n";
    for (std::size_t p = 0; p < paragraphs_per_doc; ++p) {
      const auto& text = paras[d * paragraphs_per_doc + p];
      if (p % 8 == 0) doc += "Manuale di esercizi\n";
      doc += "<p>" + text + "</p>\n\n";
      if (p % 8 == 7) doc += fmt::format("- {} -\n\n", p / 8 + 1);
      if (rng.below(10) == 0) doc += "<p>" + text + "</p>\n\n";
    }
    doc += "</body></html>\n";
    write_file_bytes(dir / "corpus" / fmt::format("capitolo{:02d}.txt", d + 1), doc);
  }

  const auto tasks = synthetic::make_items(n_items, seed);
  std::vector<nlohmann::json> rows;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto q = synthetic_qa_item(tasks[i], rng);
    if (i % 10 == 9) q.rationale = tasks[i].rationale;
    if (i % 17 == 16) q.question = "Osserva la figura 3. " + q.question;
    rows.push_back(to_json(q));
  }
  write_file_bytes(dir / "items.jsonl", to_jsonl(rows));
  return {n_items, n_docs};
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareSummary {
  std::size_t documents = 0;
  std::size_t paragraphs = 0;
  std::size_t duplicates = 0;
  std::size_t chunks = 0;
  std::size_t items = 0;
  std::size_t rejected = 0;
  std::size_t train = 0, dev = 0, test = 0;
};

struct SourceDoc {
  std::string title;
  std::string text;
};

// *.txt files (title = stem) and *.jsonl files of {"title", "text"}, in path
// order.
inline std::vector<SourceDoc> read_sources(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext == ".txt" || ext == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SourceDoc> docs;
  for (const auto& f : files) {
    if (f.extension() == ".txt") {
      docs.push_back({f.stem().string(), read_file_bytes(f)});
      continue;
    }
    for (const auto& j : read_jsonl(f)) {
      if (!j.contains("text")) throw ValidationError(f.string() + ": source line without \"text\"");
      docs.push_back({j.value("title", f.stem().string()), j.at("text").get<std::string>()});
    }
  }
  return docs;
}

inline std::unique_ptr<Tokenizer> make_corpus_tokenizer(const std::string& name) {
  if (name == "word") return std::make_unique<WordPunctTokenizer>();
  if (name == "char") return std::make_unique<CharVocab>();
  throw ValidationError("unknown tokenizer '" + name + "' (expected word or char)");
}

inline PrepareSummary cmd_prepare(const RunConfig& cfg) {
  const auto& d = cfg.dataprep;
  const auto corpus_dir = require_dir(d.corpus_dir, "dataprep.corpus_dir");
  const auto items_path = require_file(d.items, "dataprep.items");
  d.ratios.validate();
  if (d.overlap >= d.window) throw ValidationError("dataprep.overlap must be smaller than window");
  const auto out = prepare_out_dir(cfg);
  PrepareSummary sum;

  CleanConfig clean;
  clean.header_patterns = d.header_patterns;
  auto docs = read_sources(corpus_dir);
  sum.documents = docs.size();

  // Global sequential dedup over all paragraphs in document order.
  std::vector<std::string> paragraphs;
  std::vector<std::size_t> owner;
  std::vector<std::size_t> local;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto ps = split_paragraphs(clean_text(docs[i].text, clean));
    for (std::size_t k = 0; k < ps.size(); ++k) {
      paragraphs.push_back(ps[k]);
      owner.push_back(i);
      local.push_back(k);
    }
  }
  sum.paragraphs = paragraphs.size();
  DedupConfig dc;
  dc.threshold = d.dedup_threshold;
  const auto dedup = dedup_paragraphs(paragraphs, dc);
  sum.duplicates = dedup.removed.size();
  std::string dedup_log = "source_title,paragraph_index,duplicate_of_title,duplicate_of_index,exact,similarity\n";
  for (const auto& r : dedup.removed) {
    dedup_log += fmt::format("{},{},{},{},{},{:.6f}\n", docs[owner[r.index]].title, local[r.index],
                             docs[owner[r.duplicate_of]].title, local[r.duplicate_of],
                             r.exact ? 1 : 0, r.similarity);
  }
  write_file_bytes(out / "dedup.csv", dedup_log);

  std::vector<std::string> kept_text(docs.size());
  for (std::size_t k = 0; k < dedup.kept.size(); ++k) {
    auto& t = kept_text[owner[dedup.kept_indices[k]]];
    if (!t.empty()) t += "\n\n";
    t += dedup.kept[k];
  }
  const auto tok = make_corpus_tokenizer(d.tokenizer);
  std::vector<nlohmann::json> chunk_rows;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (kept_text[i].empty()) continue;
    const auto enc = tok->encode_with_spans(kept_text[i]);
    if (enc.ids.empty()) continue;
    for (const auto& c : chunk_tokens(enc, docs[i].title, d.window, d.overlap)) {
      chunk_rows.push_back(to_json(c, kept_text[i]));
    }
  }
  sum.chunks = chunk_rows.size();
  write_file_bytes(out / "corpus.jsonl", to_jsonl(chunk_rows));

  const auto items = read_qa_items(items_path);
  sum.items = items.size();
  FilterConfig fc;
  fc.min_rationale_chars = d.min_rationale_chars;
  const auto filtered = filter_items(items, fc);
  sum.rejected = filtered.rejected.size();
  write_file_bytes(out / "rejections.csv", rejections_csv(filtered.rejected));
  const auto split = stratified_split(filtered.kept, d.ratios, cfg.seed);
  write_file_bytes(out / "train.jsonl", qa_items_jsonl(split.train));
  write_file_bytes(out / "dev.jsonl", qa_items_jsonl(split.dev));
  write_file_bytes(out / "test.jsonl", qa_items_jsonl(split.test));
  sum.train = split.train.size();
  sum.dev = split.dev.size();
  sum.test = split.test.size();
  spdlog::info("prepare: {} docs, {} paragraphs ({} duplicates), {} chunks; {} items, {} rejected, "
               "split {}/{}/{}",
               sum.documents, sum.paragraphs, sum.duplicates, sum.chunks, sum.items, sum.rejected,
               sum.train, sum.dev, sum.test);
  return sum;
}

// ---------------------------------------------------------------------------
// train

// Chunk text is re-encoded with the policy vocabulary; the chunking
// tokenizer's ids are not policy ids.
inline std::vector<std::vector<TokenId>> read_clm_corpus(const fs::path& path) {
  const CharVocab vocab;
  std::vector<std::vector<TokenId>> out;
  for (const auto& j : read_jsonl(path)) {
    if (!j.contains("text")) throw ValidationError(path.string() + ": chunk without \"text\"");
    auto ids = vocab.encode(j.at("text").get<std::string>());
    if (!ids.empty()) out.push_back(std::move(ids));
  }
  if (out.empty()) throw ValidationError(path.string() + ": corpus is empty");
  return out;
}

// Split-file rows carry "prompt" and "completion"; bare items are formatted
// on the fly.
inline std::vector<Instruction> read_instructions(const fs::path& path,
                                                  std::vector<QaItem>* items = nullptr) {
  std::vector<Instruction> out;
  for (const auto& j : read_jsonl(path)) {
    const auto it = qa_item_from_json(j);
    Instruction ins = to_instruction(it);
    if (j.contains("prompt")) ins.prompt = j.at("prompt").get<std::string>();
    if (j.contains("completion")) ins.completion = j.at("completion").get<std::string>();
    out.push_back(std::move(ins));
    if (items) items->push_back(it);
  }
  if (out.empty()) throw ValidationError(path.string() + ": no items");
  return out;
}

inline PolicyParams initial_policy(const RunConfig& cfg, const std::string& init) {
  if (init.empty()) return init_params(cfg.policy, cfg.seed);
  return load_checkpoint(require_file(init, "init checkpoint"));
}

inline SupervisedConfig supervised_config(const StageSection& s, std::uint64_t seed) {
  SupervisedConfig sc;
  sc.epochs = s.epochs;
  sc.batch_size = s.batch_size;
  sc.schedule = {s.lr, s.warmup_steps, 0};
  sc.seed = seed;
  sc.max_steps = s.max_steps;
  return sc;
}

// Zero requested steps copies the input checkpoint verbatim.
inline bool copy_if_no_steps(const std::optional<std::size_t>& steps, const std::string& init,
                             const fs::path& dest, const RunConfig& cfg) {
  if (!steps || *steps != 0) return false;
  if (init.empty()) {
    save_checkpoint(dest, init_params(cfg.policy, cfg.seed));
  } else {
    write_file_bytes(dest, read_file_bytes(require_file(init, "init checkpoint")));
  }
  return true;
}

inline fs::path cmd_train_cpt(const RunConfig& cfg) {
  const auto& s = cfg.cpt;
  const auto data = require_file(s.data, "cpt.data");
  const auto out = prepare_out_dir(cfg);
  const auto ckpt = out / "final.ckpt";
  if (copy_if_no_steps(s.max_steps, s.init, ckpt, cfg)) return ckpt;
  auto params = initial_policy(cfg, s.init);
  const auto chunks = read_clm_corpus(data);
  auto opt = make_optimizer(s.optimizer, s.weight_decay);
  ClmConfig cc;
  cc.seq_len = s.seq_len;
  cc.train = supervised_config(s, cfg.seed);
  const auto r = train_clm(chunks, params, *opt, cc);
  write_file_bytes(out / "metrics.csv", stage_metrics_csv(r));
  save_checkpoint(ckpt, params);
  spdlog::info("cpt ({}): {} steps, loss {:.4f} -> {:.4f}", s.optimizer, r.steps,
               r.step_loss.empty() ? 0.0 : r.step_loss.front(),
               r.step_loss.empty() ? 0.0 : r.step_loss.back());
  return ckpt;
}

// Both optimizers from the same initial weights; side-by-side losses.
inline fs::path cmd_ablate(const RunConfig& cfg) {
  const auto& s = cfg.cpt;
  const auto data = require_file(s.data, "cpt.data");
  const auto out = prepare_out_dir(cfg);
  const auto init = initial_policy(cfg, s.init);
  ClmConfig cc;
  cc.seq_len = s.seq_len;
  cc.train = supervised_config(s, cfg.seed);
  const auto arms = cpt_ablation(read_clm_corpus(data), init, {"adamw", "muon"}, cc, s.weight_decay);
  for (const auto& a : arms) save_checkpoint(out / (a.optimizer + ".ckpt"), a.params);
  write_file_bytes(out / "ablation.csv", ablation_csv(arms));
  return out / "ablation.csv";
}

inline fs::path cmd_train_sft(const RunConfig& cfg) {
  const auto& s = cfg.sft;
  const auto init = require_file(s.init, "sft.init (CPT checkpoint)");
  const auto data = require_file(s.data, "sft.data");
  const auto out = prepare_out_dir(cfg);
  const auto ckpt = out / "final.ckpt";
  if (copy_if_no_steps(s.max_steps, s.init, ckpt, cfg)) return ckpt;
  auto params = load_checkpoint(init);
  const CharVocab vocab;
  std::vector<SftExample> examples;
  for (const auto& ins : read_instructions(data)) {
    auto c = vocab.encode(ins.completion);
    c.push_back(CharVocab::kEos);
    examples.push_back({vocab.encode(ins.prompt), std::move(c)});
  }
  auto opt = make_optimizer(s.optimizer, s.weight_decay);
  const auto r = train_sft(examples, params, *opt, supervised_config(s, cfg.seed), s.mask_prompt);
  write_file_bytes(out / "metrics.csv", stage_metrics_csv(r));
  save_checkpoint(ckpt, params);
  spdlog::info("sft: {} steps, final epoch loss {:.4f}", r.steps,
               r.epochs.empty() ? 0.0 : r.epochs.back().mean_loss);
  return ckpt;
}

// Judge client for the reward, present only when the judge component is on.
inline std::unique_ptr<JudgeClient> reward_judge(const RunConfig& cfg, const RewardConfig& rc) {
  if (!rc.has(Component::kJudge)) return nullptr;
  return make_judge(cfg.grpo.judge, judge_endpoint(cfg.judge));
}

inline fs::path cmd_train_grpo(const RunConfig& cfg) {
  const auto& g = cfg.grpo;
  const auto init = require_file(g.init, "grpo.init (SFT checkpoint)");
  const auto data = require_file(g.data, "grpo.data");
  const auto out = prepare_out_dir(cfg);
  const auto ckpt = out / "final.ckpt";
  if (g.steps == 0) {
    write_file_bytes(ckpt, read_file_bytes(init));
    return ckpt;
  }
  // The reference is the SFT model; an adapter already present is folded in.
  const auto base = merge_lora(load_checkpoint(init));
  const auto rc = reward_config(g);
  auto embedder = make_embedder(cfg.embedder);
  auto judge = reward_judge(cfg, rc);

  std::vector<QaItem> items;
  const auto instructions = read_instructions(data, &items);
  std::vector<std::string> rationales;
  for (const auto& it : items) rationales.push_back(it.rationale);
  const auto v_ref =
      reference_centroid(sample_reference_texts(rationales, g.reference_sample, cfg.seed), *embedder);
  const CharVocab vocab;
  std::vector<GrpoPrompt> prompts;
  for (std::size_t i = 0; i < items.size(); ++i) {
    prompts.push_back({items[i].id, vocab.encode(instructions[i].prompt),
                       make_reward_context(items[i].rationale, items[i].answer, v_ref, *embedder)});
  }

  TrainState st;
  st.reference = base;
  st.policy = base;
  attach_lora(st.policy, lora_config(g), cfg.seed);
  st.optimizer = make_optimizer(g.optimizer);
  GrpoConfig gc;
  gc.group_size = g.group_size;
  gc.clip_eps = g.clip_eps;
  gc.kl_coeff = g.kl_coeff;
  gc.temperature = g.temperature;
  gc.steps = g.steps;
  gc.prompts_per_step = g.prompts_per_step;
  gc.inner_epochs = g.inner_epochs;
  gc.max_new_tokens = g.max_new_tokens;
  gc.token_weighted = g.token_weighted;
  gc.schedule = {g.lr, g.warmup_steps, 0};
  gc.seed = cfg.seed;

  RewardScorer scorer(rc, *embedder, judge.get());
  const RewardFn fn = [&](const std::vector<std::string>& texts, const RewardContext& ctx) {
    return scorer.score(texts, ctx);
  };
  GrpoRunOptions opts;
  opts.run_dir = out;
  opts.checkpoint_every = g.checkpoint_every;
  opts.on_step = [](const StepMetrics& m) {
    if (m.step % 10 == 0) spdlog::info("grpo step {}: mean reward {:.4f}, kl {:.5f}", m.step, m.mean_total, m.mean_kl);
  };
  run_grpo(st, prompts, fn, gc, vocab, opts);
  save_checkpoint(ckpt, st.policy);
  return ckpt;
}

// ---------------------------------------------------------------------------
// generate / score

inline fs::path cmd_generate(const RunConfig& cfg, const fs::path& out_file) {
  const auto& s = cfg.generate;
  const auto ckpt = require_file(s.checkpoint, "generate.checkpoint");
  const auto items_path = require_file(s.items, "generate.items");
  const auto params = load_checkpoint(ckpt);
  std::vector<QaItem> items;
  auto instructions = read_instructions(items_path, &items);
  if (s.limit && *s.limit < items.size()) {
    items.resize(*s.limit);
    instructions.resize(*s.limit);
  }
  const CharVocab vocab;
  std::vector<std::vector<TokenId>> prompts;
  for (const auto& ins : instructions) prompts.push_back(vocab.encode(ins.prompt));
  const auto texts = greedy_decode(params, prompts, vocab, s.max_new_tokens);
  std::vector<nlohmann::json> rows;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto parsed = parse_tagged(texts[i]);
    nlohmann::json row = {{"item_id", items[i].id},
                          {"text", texts[i]},
                          {"explanation", explanation_text(parsed, texts[i])}};
    row["answer"] = parsed.risposta ? nlohmann::json(*parsed.risposta) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  write_file_bytes(out_file, to_jsonl(rows));
  return out_file;
}

inline constexpr std::string_view kScoreHeader =
    "item_id,status,semantic,rouge,judge,answer,format,think,total";

struct ScoreSummary {
  std::size_t rows = 0;
  std::size_t errors = 0;
};

// Every component is scored; the judge only when the config's reward list
// names it. Rows for items without ground truth carry status missing_gt and
// empty cells.
inline ScoreSummary cmd_score(const RunConfig& cfg, const fs::path& generations,
                              const fs::path& items_path, const fs::path& out_csv) {
  require_file(generations.string(), "generations file");
  require_file(items_path.string(), "items file");
  std::map<std::string, QaItem> gt;
  std::vector<std::string> rationales;
  for (const auto& it : read_qa_items(items_path)) {
    rationales.push_back(it.rationale);
    gt.emplace(it.id, it);
  }
  if (rationales.empty()) throw ValidationError(items_path.string() + ": no items");
  RewardConfig rc;
  rc.c = cfg.grpo.c;
  rc.clamp_floor = cfg.grpo.clamp_floor;
  rc.enabled = {Component::kSemantic, Component::kRouge, Component::kAnswer, Component::kFormat,
                Component::kThink};
  if (std::find(cfg.grpo.rewards.begin(), cfg.grpo.rewards.end(), "judge") != cfg.grpo.rewards.end()) {
    rc.enabled.insert(Component::kJudge);
  }
  auto embedder = make_embedder(cfg.embedder);
  auto judge = reward_judge(cfg, rc);
  const auto v_ref = reference_centroid(
      sample_reference_texts(rationales, cfg.grpo.reference_sample, cfg.seed), *embedder);
  RewardScorer scorer(rc, *embedder, judge.get());

  ScoreSummary sum;
  std::string csv(kScoreHeader);
  csv += '\n';
  for (const auto& j : read_jsonl(generations)) {
    const auto id = j.value("item_id", std::string());
    const auto text = j.value("text", std::string());
    ++sum.rows;
    const auto it = gt.find(id);
    if (it == gt.end()) {
      ++sum.errors;
      csv += fmt::format("{},missing_gt,,,,,,,\n", id);
      continue;
    }
    const auto ctx = make_reward_context(it->second.rationale, it->second.answer, v_ref, *embedder);
    const auto b = scorer.score({text}, ctx).at(0);
    csv += fmt::format("{},ok,{},{},{},{},{},{},{:.10g}\n", id, format_metric(b.semantic),
                       format_metric(b.rouge), format_metric(b.judge), format_metric(b.answer),
                       format_metric(b.format), format_metric(b.think), b.total);
  }
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  write_file_bytes(out_csv, csv);
  if (sum.errors > 0) spdlog::warn("score: {} of {} rows had no ground truth", sum.errors, sum.rows);
  return sum;
}

// ---------------------------------------------------------------------------
// arena

inline TournamentResult cmd_arena(const RunConfig& cfg) {
  const auto& a = cfg.arena;
  const auto models = read_model_dir(require_dir(a.models_dir, "arena.models_dir"));
  std::vector<ArenaItem> items;
  if (!a.items.empty()) {
    for (const auto& it : read_qa_items(require_file(a.items, "arena.items"))) {
      ArenaItem ai{it.id, it.question, std::nullopt};
      if (!it.answer.empty()) ai.gold_answer = it.answer;
      items.push_back(std::move(ai));
    }
  } else {
    std::set<std::string> ids;
    for (const auto& m : models)
      for (const auto& [id, _] : m.explanations) ids.insert(id);
    for (const auto& id : ids) items.push_back({id, "", std::nullopt});
  }
  const auto endpoint = judge_endpoint(cfg.judge);
  std::vector<std::unique_ptr<JudgeClient>> owned;
  std::vector<JudgeClient*> judges;
  for (const auto& spec : a.judges) {
    owned.push_back(make_judge(spec, endpoint));
    judges.push_back(owned.back().get());
  }
  TournamentConfig tc;
  tc.k = a.k;
  tc.seed = cfg.seed;
  tc.both_orders = a.both_orders;
  tc.repeats = a.repeats;
  tc.parallelism = a.parallelism;
  tc.bradley_terry = a.bradley_terry;
  auto result = run_tournament(models, items, judges, tc);
  const auto out = prepare_out_dir(cfg);
  write_file_bytes(out / "ratings.csv", ratings_csv(result));
  write_file_bytes(out / "aggregate.csv", aggregate_csv(result));
  write_file_bytes(out / "matches.csv", matches_csv(result));
  return result;
}

// ---------------------------------------------------------------------------
// report

// One SVG per recognised CSV found directly under in_dir.
inline std::vector<fs::path> cmd_report(const fs::path& in_dir, const fs::path& out_dir) {
  require_dir(in_dir.string(), "report input");
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& svg) {
    write_file_bytes(out_dir / name, svg);
    written.push_back(out_dir / name);
  };
  if (fs::is_regular_file(in_dir / "metrics.csv")) {
    const auto t = read_csv(in_dir / "metrics.csv");
    if (std::find(t.header.begin(), t.header.end(), "mean_total") != t.header.end()) {
      emit("rewards.svg",
           line_chart_svg("GRPO rewards", "step", "mean reward",
                                  series_from_csv(t, "step",
                                                          {"mean_total", "mean_semantic", "mean_rouge",
                                                           "mean_judge", "mean_answer", "mean_format",
                                                           "mean_think"})));
    } else {
      emit("loss.svg", line_chart_svg("training loss", "step", "loss",
                                              series_from_csv(t, "step", {"loss"})));
    }
  }
  if (fs::is_regular_file(in_dir / "ablation.csv")) {
    const auto t = read_csv(in_dir / "ablation.csv");
    std::vector<std::string> cols(t.header.begin() + 1, t.header.end());
    emit("ablation.svg", line_chart_svg("CPT loss by optimizer", "step", "loss",
                                                series_from_csv(t, "step", cols)));
  }
  if (fs::is_regular_file(in_dir / "aggregate.csv")) {
    const auto t = read_csv(in_dir / "aggregate.csv");
    emit("elo.svg", bar_chart_svg("Elo across judges (min-max)", "Elo",
                                          elo_bars_from_csv(t)));
  }
  if (written.empty()) throw ValidationError("no metrics.csv, ablation.csv or aggregate.csv in " + in_dir.string());
  return written;
}

}  // namespace semrank::pipeline
