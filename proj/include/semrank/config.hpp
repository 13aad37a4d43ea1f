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

// Versioned JSON run configuration. Every field has a default, so "{}" plus
// "version": 1 is a valid config; unknown keys are rejected to catch typos.

#pragma once

#include <filesystem>
#include <fstream>
#include <type_traits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "semrank/arena.hpp"
#include "semrank/common.hpp"
#include "semrank/dataprep.hpp"
#include "semrank/policy.hpp"
#include "semrank/rewards.hpp"

namespace semrank {

inline constexpr int kConfigVersion = 1;

struct EmbedderSection {
  std::string kind = "toy";  // toy | remote
  std::size_t dim = 256;     // toy only
  // remote; unset fields fall back to SEMRANK_EMBED_URL / SEMRANK_EMBED_TOKEN
  std::string url;
  double timeout_seconds = 30.0;
  std::size_t batch_size = 32;
  int max_retries = 1;
  std::size_t parallelism = 1;
};

struct JudgeSection {
  // unset fields fall back to SEMRANK_JUDGE_URL / _TOKEN / _MODEL
  std::string url;
  std::string model;
  double timeout_seconds = 60.0;
  int max_retries = 1;
};

struct DataprepSection {
  std::string corpus_dir;  // *.txt and *.jsonl ({"title", "text"}) sources
  std::string items;       // Q&A JSON-lines
  std::size_t window = 4096;
  std::size_t overlap = 256;
  double dedup_threshold = 0.9;
  std::size_t min_rationale_chars = 120;
  SplitRatios ratios;
  std::string tokenizer = "word";  // word | char
  std::vector<std::string> header_patterns;
};

struct StageSection {
  std::string data;  // training input (chunks or items JSON-lines)
  std::string init;  // input checkpoint
  std::string optimizer = "adamw";
  double lr = 3e-3;
  std::size_t warmup_steps = 0;
  std::size_t epochs = 1;
  std::size_t batch_size = 8;
  std::optional<std::size_t> max_steps;
  double weight_decay = 0.0;
  std::size_t seq_len = 128;  // cpt
  bool mask_prompt = true;    // sft
};

struct GrpoSection {
  std::string data;
  std::string init;
  std::size_t steps = 1000;
  std::size_t group_size = 6;
  double clip_eps = 0.2;
  double kl_coeff = 0.05;
  double temperature = 0.7;
  double lr = 5e-3;
  std::size_t warmup_steps = 0;
  std::size_t prompts_per_step = 4;
  std::size_t inner_epochs = 1;
  std::size_t max_new_tokens = 96;
  bool token_weighted = false;
  std::string optimizer = "adamw";
  std::vector<std::string> rewards = {"semantic", "answer", "format", "think"};
  double c = 4.0;
  bool clamp_floor = true;
  std::size_t reference_sample = 256;
  std::size_t lora_rank = 32;
  double lora_alpha = 64.0;
  std::vector<std::string> lora_targets = {"W1", "W2"};
  std::size_t checkpoint_every = 0;
  std::string judge = "mock:overlap";  // used when "judge" is among rewards
};

struct ArenaSection {
  std::string models_dir;
  std::string items;
  std::vector<std::string> judges = {"mock:longer", "mock:shorter", "mock:overlap"};
  double k = 32.0;
  bool both_orders = false;
  std::size_t repeats = 1;
  std::size_t parallelism = 1;
  bool bradley_terry = false;
};

struct GenerateSection {
  std::string checkpoint;
  std::string items;
  std::size_t max_new_tokens = 96;
  std::optional<std::size_t> limit;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  std::string out = "runs/default";
  PolicyShape policy;
  EmbedderSection embedder;
  JudgeSection judge;
  DataprepSection dataprep;
  StageSection cpt;
  StageSection sft;
  GrpoSection grpo;
  ArenaSection arena;
  GenerateSection generate;
};

namespace detail {

template <typename T>
struct is_optional : std::false_type {};
template <typename T>
struct is_optional<std::optional<T>> : std::true_type {};

// Reads obj[key] into out when present; finish() rejects keys never asked for.
class Reader {
 public:
  Reader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      if constexpr (is_optional<T>::value) {
        if (obj_[key].is_null()) {
          out.reset();
        } else {
          out = obj_[key].get<typename T::value_type>();
        }
      } else {
        out = obj_[key].get<T>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config: bad value for '" + path_ + key + "': " + e.what());
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_[key] : nullptr;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        throw ValidationError("config: unknown key '" + path_ + it.key() + "'");
      }
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_stage(const nlohmann::json& j, const std::string& name, StageSection& s) {
  Reader r(j, name + ".");
  r.get("data", s.data);
  r.get("init", s.init);
  r.get("optimizer", s.optimizer);
  r.get("lr", s.lr);
  r.get("warmup_steps", s.warmup_steps);
  r.get("epochs", s.epochs);
  r.get("batch_size", s.batch_size);
  r.get("max_steps", s.max_steps);
  r.get("weight_decay", s.weight_decay);
  r.get("seq_len", s.seq_len);
  r.get("mask_prompt", s.mask_prompt);
  r.finish();
}

inline nlohmann::json stage_json(const StageSection& s) {
  nlohmann::json j = {{"data", s.data},
                      {"init", s.init},
                      {"optimizer", s.optimizer},
                      {"lr", s.lr},
                      {"warmup_steps", s.warmup_steps},
                      {"epochs", s.epochs},
                      {"batch_size", s.batch_size},
                      {"weight_decay", s.weight_decay},
                      {"seq_len", s.seq_len},
                      {"mask_prompt", s.mask_prompt}};
  j["max_steps"] = s.max_steps ? nlohmann::json(*s.max_steps) : nlohmann::json(nullptr);
  return j;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  detail::Reader r(j, "");
  r.get("version", c.version);
  if (c.version != kConfigVersion) {
    throw ValidationError("config: unsupported version " + std::to_string(c.version));
  }
  r.get("seed", c.seed);
  r.get("out", c.out);
  if (auto* p = r.child("policy")) {
    detail::Reader pr(*p, "policy.");
    pr.get("context", c.policy.context);
    pr.get("embed", c.policy.embed);
    pr.get("hidden", c.policy.hidden);
    pr.finish();
  }
  if (auto* e = r.child("embedder")) {
    detail::Reader er(*e, "embedder.");
    er.get("kind", c.embedder.kind);
    er.get("dim", c.embedder.dim);
    er.get("url", c.embedder.url);
    er.get("timeout_seconds", c.embedder.timeout_seconds);
    er.get("batch_size", c.embedder.batch_size);
    er.get("max_retries", c.embedder.max_retries);
    er.get("parallelism", c.embedder.parallelism);
    er.finish();
  }
  if (auto* e = r.child("judge")) {
    detail::Reader jr(*e, "judge.");
    jr.get("url", c.judge.url);
    jr.get("model", c.judge.model);
    jr.get("timeout_seconds", c.judge.timeout_seconds);
    jr.get("max_retries", c.judge.max_retries);
    jr.finish();
  }
  if (auto* d = r.child("dataprep")) {
    detail::Reader dr(*d, "dataprep.");
    dr.get("corpus_dir", c.dataprep.corpus_dir);
    dr.get("items", c.dataprep.items);
    dr.get("window", c.dataprep.window);
    dr.get("overlap", c.dataprep.overlap);
    dr.get("dedup_threshold", c.dataprep.dedup_threshold);
    dr.get("min_rationale_chars", c.dataprep.min_rationale_chars);
    std::vector<double> ratios;
    dr.get("ratios", ratios);
    if (!ratios.empty()) {
      if (ratios.size() != 3) throw ValidationError("config: dataprep.ratios needs 3 values");
      c.dataprep.ratios = {ratios[0], ratios[1], ratios[2]};
    }
    dr.get("tokenizer", c.dataprep.tokenizer);
    dr.get("header_patterns", c.dataprep.header_patterns);
    dr.finish();
  }
  if (auto* s = r.child("cpt")) detail::read_stage(*s, "cpt", c.cpt);
  if (auto* s = r.child("sft")) detail::read_stage(*s, "sft", c.sft);
  if (auto* g = r.child("grpo")) {
    detail::Reader gr(*g, "grpo.");
    auto& s = c.grpo;
    gr.get("data", s.data);
    gr.get("init", s.init);
    gr.get("steps", s.steps);
    gr.get("group_size", s.group_size);
    gr.get("clip_eps", s.clip_eps);
    gr.get("kl_coeff", s.kl_coeff);
    gr.get("temperature", s.temperature);
    gr.get("lr", s.lr);
    gr.get("warmup_steps", s.warmup_steps);
    gr.get("prompts_per_step", s.prompts_per_step);
    gr.get("inner_epochs", s.inner_epochs);
    gr.get("max_new_tokens", s.max_new_tokens);
    gr.get("token_weighted", s.token_weighted);
    gr.get("optimizer", s.optimizer);
    gr.get("rewards", s.rewards);
    gr.get("c", s.c);
    gr.get("clamp_floor", s.clamp_floor);
    gr.get("reference_sample", s.reference_sample);
    gr.get("lora_rank", s.lora_rank);
    gr.get("lora_alpha", s.lora_alpha);
    gr.get("lora_targets", s.lora_targets);
    gr.get("checkpoint_every", s.checkpoint_every);
    gr.get("judge", s.judge);
    gr.finish();
  }
  if (auto* a = r.child("arena")) {
    detail::Reader ar(*a, "arena.");
    ar.get("models_dir", c.arena.models_dir);
    ar.get("items", c.arena.items);
    ar.get("judges", c.arena.judges);
    ar.get("k", c.arena.k);
    ar.get("both_orders", c.arena.both_orders);
    ar.get("repeats", c.arena.repeats);
    ar.get("parallelism", c.arena.parallelism);
    ar.get("bradley_terry", c.arena.bradley_terry);
    ar.finish();
  }
  if (auto* g = r.child("generate")) {
    detail::Reader gr(*g, "generate.");
    gr.get("checkpoint", c.generate.checkpoint);
    gr.get("items", c.generate.items);
    gr.get("max_new_tokens", c.generate.max_new_tokens);
    gr.get("limit", c.generate.limit);
    gr.finish();
  }
  r.finish();
  return c;
}

inline nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["version"] = c.version;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["policy"] = {{"context", c.policy.context}, {"embed", c.policy.embed}, {"hidden", c.policy.hidden}};
  j["embedder"] = {{"kind", c.embedder.kind},
                   {"dim", c.embedder.dim},
                   {"url", c.embedder.url},
                   {"timeout_seconds", c.embedder.timeout_seconds},
                   {"batch_size", c.embedder.batch_size},
                   {"max_retries", c.embedder.max_retries},
                   {"parallelism", c.embedder.parallelism}};
  j["judge"] = {{"url", c.judge.url},
                {"model", c.judge.model},
                {"timeout_seconds", c.judge.timeout_seconds},
                {"max_retries", c.judge.max_retries}};
  const auto& d = c.dataprep;
  j["dataprep"] = {{"corpus_dir", d.corpus_dir},
                   {"items", d.items},
                   {"window", d.window},
                   {"overlap", d.overlap},
                   {"dedup_threshold", d.dedup_threshold},
                   {"min_rationale_chars", d.min_rationale_chars},
                   {"ratios", {d.ratios.train, d.ratios.dev, d.ratios.test}},
                   {"tokenizer", d.tokenizer},
                   {"header_patterns", d.header_patterns}};
  j["cpt"] = detail::stage_json(c.cpt);
  j["sft"] = detail::stage_json(c.sft);
  const auto& g = c.grpo;
  j["grpo"] = {{"data", g.data},
               {"init", g.init},
               {"steps", g.steps},
               {"group_size", g.group_size},
               {"clip_eps", g.clip_eps},
               {"kl_coeff", g.kl_coeff},
               {"temperature", g.temperature},
               {"lr", g.lr},
               {"warmup_steps", g.warmup_steps},
               {"prompts_per_step", g.prompts_per_step},
               {"inner_epochs", g.inner_epochs},
               {"max_new_tokens", g.max_new_tokens},
               {"token_weighted", g.token_weighted},
               {"optimizer", g.optimizer},
               {"rewards", g.rewards},
               {"c", g.c},
               {"clamp_floor", g.clamp_floor},
               {"reference_sample", g.reference_sample},
               {"lora_rank", g.lora_rank},
               {"lora_alpha", g.lora_alpha},
               {"lora_targets", g.lora_targets},
               {"checkpoint_every", g.checkpoint_every},
               {"judge", g.judge}};
  const auto& a = c.arena;
  j["arena"] = {{"models_dir", a.models_dir},   {"items", a.items},
                {"judges", a.judges},           {"k", a.k},
                {"both_orders", a.both_orders}, {"repeats", a.repeats},
                {"parallelism", a.parallelism}, {"bradley_terry", a.bradley_terry}};
  j["generate"] = {{"checkpoint", c.generate.checkpoint},
                   {"items", c.generate.items},
                   {"max_new_tokens", c.generate.max_new_tokens}};
  j["generate"]["limit"] =
      c.generate.limit ? nlohmann::json(*c.generate.limit) : nlohmann::json(nullptr);
  return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

inline RewardConfig reward_config(const GrpoSection& g) {
  RewardConfig rc;
  rc.c = g.c;
  rc.clamp_floor = g.clamp_floor;
  rc.enabled.clear();
  for (const auto& name : g.rewards) rc.enabled.insert(component_from_string(name));
  rc.validate();
  return rc;
}

inline LoraConfig lora_config(const GrpoSection& g) {
  LoraConfig l;
  l.rank = g.lora_rank;
  l.alpha = g.lora_alpha;
  l.target_w1 = l.target_w2 = false;
  for (const auto& t : g.lora_targets) {
    if (t == "W1") l.target_w1 = true;
    else if (t == "W2") l.target_w2 = true;
    else throw ValidationError("config: unknown LoRA target '" + t + "'");
  }
  return l;
}

}  // namespace semrank
