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

// semrank command-line tool.
//
// Exit codes: 0 success, 2 bad input (flags, config, missing files or
// checkpoints), 1 anything else.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "semrank/config.hpp"
#include "semrank/mockserve.hpp"
#include "semrank/pipeline.hpp"

namespace {

using semrank::RunConfig;
using semrank::ValidationError;
namespace pipeline = semrank::pipeline;
namespace mockserve = semrank::mockserve;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> optimizer;
  std::optional<std::size_t> steps;
  std::optional<std::string> judges;
  std::optional<std::string> embedder;
  // Stage inputs; each overrides the matching config field.
  std::optional<std::string> data;
  std::optional<std::string> init;
  std::optional<std::string> items;
  std::optional<std::string> models;
  std::optional<std::string> checkpoint;
  std::optional<std::string> corpus;
  std::optional<std::string> generations;
  bool verbose = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(semrank::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!semrank::trim(cur).empty()) out.push_back(semrank::trim(cur));
  return out;
}

RunConfig base_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : semrank::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.embedder) {
    if (*f.embedder != "toy" && *f.embedder != "remote") {
      throw ValidationError("--embedder must be toy or remote");
    }
    c.embedder.kind = *f.embedder;
  }
  if (f.judges) {
    c.arena.judges = split_list(*f.judges);
    if (c.arena.judges.empty()) throw ValidationError("--judges is empty");
  }
  return c;
}

void apply_stage(const Flags& f, semrank::StageSection& s) {
  if (f.optimizer) s.optimizer = *f.optimizer;
  if (f.steps) s.max_steps = *f.steps;
  if (f.data) s.data = *f.data;
  if (f.init) s.init = *f.init;
}

// A judge named on the command line turns the judge reward on.
void apply_reward_judge(const Flags& f, RunConfig& c) {
  if (!f.judges) return;
  c.grpo.judge = c.arena.judges.front();
  auto& r = c.grpo.rewards;
  if (std::find(r.begin(), r.end(), "judge") == r.end()) r.push_back("judge");
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int serve(const mockserve::StubBehavior& b, int port, const std::string& host) {
  mockserve::StubServer server;
  server.start(b, port, host);
  std::printf("%s\n", server.base_url().c_str());
  std::fflush(stdout);
  spdlog::info("{} stub listening on {}", mockserve::to_string(b.mode), server.base_url());
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

struct ServeFlags {
  std::string mode;
  int port = 0;
  std::string host = "127.0.0.1";
  std::size_t dim = 256;
  int score = 7;
  int status = 500;
  std::string token;
  std::string prefix;
  int delay_ms = 0;
};

void add_serve_flags(CLI::App* cmd, ServeFlags& s, const std::string& default_mode) {
  s.mode = default_mode;
  cmd->add_option("--mode", s.mode, "stub behavior")->capture_default_str();
  cmd->add_option("--port", s.port, "port, 0 picks a free one")->capture_default_str();
  cmd->add_option("--host", s.host, "bind address")->capture_default_str();
  cmd->add_option("--dim", s.dim, "toy-embed dimension")->capture_default_str();
  cmd->add_option("--score", s.score, "fixed-score reply")->capture_default_str();
  cmd->add_option("--status", s.status, "fail-with-status HTTP status")->capture_default_str();
  cmd->add_option("--token", s.token, "required bearer token");
  cmd->add_option("--prefix", s.prefix, "path prefix, e.g. /v1");
  cmd->add_option("--delay-ms", s.delay_ms, "latency per request");
}

mockserve::StubBehavior behavior_of(const ServeFlags& s, std::uint64_t seed) {
  mockserve::StubBehavior b;
  b.mode = mockserve::stub_mode_from_string(s.mode);
  b.seed = seed;
  b.dim = s.dim;
  b.fixed_score = s.score;
  b.fail_status = s.status;
  if (!s.token.empty()) b.required_token = s.token;
  b.prefix = s.prefix;
  b.delay = std::chrono::milliseconds(s.delay_ms);
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semrank: semantic-reward training pipeline for tagged explanations"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--out", f.out, "output directory (file for generate/score)");
  app.add_option("--optimizer", f.optimizer, "adamw or muon");
  app.add_option("--steps", f.steps, "optimizer steps (GRPO updates for grpo)");
  app.add_option("--judges", f.judges, "comma-separated judges, e.g. mock:longer,http:model@url");
  app.add_option("--embedder", f.embedder, "toy or remote");
  app.add_flag("-v,--verbose", f.verbose, "debug logging");

  std::size_t synth_items = 300;
  std::size_t synth_docs = 4;
  auto* synth = app.add_subcommand("synth", "write a small synthetic corpus and item file");
  synth->add_option("--items", synth_items, "number of items")->capture_default_str();
  synth->add_option("--docs", synth_docs, "number of corpus documents")->capture_default_str();

  auto* prepare = app.add_subcommand("prepare", "clean, dedup, chunk, filter and split");
  prepare->add_option("--corpus", f.corpus, "source directory");
  prepare->add_option("--items", f.items, "Q&A JSON-lines");

  auto* train = app.add_subcommand("train", "run a training stage");
  train->require_subcommand(1);
  auto* cpt = train->add_subcommand("cpt", "continued pre-training on corpus chunks");
  auto* sft = train->add_subcommand("sft", "supervised fine-tuning on instruction items");
  auto* grpo = train->add_subcommand("grpo", "GRPO with LoRA adapters");
  for (auto* s : {cpt, sft, grpo}) {
    s->add_option("--data", f.data, "training data");
    s->add_option("--init", f.init, "input checkpoint");
  }

  auto* ablate = app.add_subcommand("ablate", "CPT under AdamW and Muon from the same init");
  ablate->add_option("--data", f.data, "corpus chunks");
  ablate->add_option("--init", f.init, "input checkpoint");

  auto* generate = app.add_subcommand("generate", "greedy decodes for an item file");
  generate->add_option("--checkpoint", f.checkpoint, "policy checkpoint");
  generate->add_option("--items", f.items, "items JSON-lines");

  auto* score = app.add_subcommand("score", "reward breakdown per generation");
  score->add_option("--generations", f.generations, "JSON-lines of {item_id, text}")->required();
  score->add_option("--items", f.items, "items with ground truth")->required();

  auto* arena = app.add_subcommand("arena", "pairwise judged Elo tournament");
  arena->add_option("--models", f.models, "directory of {model}.jsonl outputs");
  arena->add_option("--items", f.items, "items JSON-lines (questions, gold answers)");

  std::string report_in;
  auto* report = app.add_subcommand("report", "SVG charts from metrics and Elo CSVs");
  report->add_option("--in", report_in, "directory with metrics.csv / aggregate.csv")->required();

  ServeFlags serve_embed_flags;
  ServeFlags serve_judge_flags;
  auto* serve_embed = app.add_subcommand("serve-embed", "stub /embed server");
  add_serve_flags(serve_embed, serve_embed_flags, "toy-embed");
  auto* serve_judge = app.add_subcommand("serve-judge", "stub chat-completions judge");
  add_serve_flags(serve_judge, serve_judge_flags, "prefer-longer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  spdlog::set_level(f.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    RunConfig c = base_config(f);
    if (*synth) {
      const auto s = pipeline::write_synthetic_inputs(c.out, c.seed, synth_items, synth_docs);
      spdlog::info("synth: {} items, {} documents under {}", s.items, s.documents, c.out);
    } else if (*prepare) {
      if (f.corpus) c.dataprep.corpus_dir = *f.corpus;
      if (f.items) c.dataprep.items = *f.items;
      pipeline::cmd_prepare(c);
    } else if (*cpt) {
      apply_stage(f, c.cpt);
      std::cout << pipeline::cmd_train_cpt(c).string() << "\n";
    } else if (*sft) {
      apply_stage(f, c.sft);
      std::cout << pipeline::cmd_train_sft(c).string() << "\n";
    } else if (*grpo) {
      if (f.optimizer) c.grpo.optimizer = *f.optimizer;
      if (f.steps) c.grpo.steps = *f.steps;
      if (f.data) c.grpo.data = *f.data;
      if (f.init) c.grpo.init = *f.init;
      apply_reward_judge(f, c);
      std::cout << pipeline::cmd_train_grpo(c).string() << "\n";
    } else if (*ablate) {
      apply_stage(f, c.cpt);
      std::cout << pipeline::cmd_ablate(c).string() << "\n";
    } else if (*generate) {
      if (f.checkpoint) c.generate.checkpoint = *f.checkpoint;
      if (f.items) c.generate.items = *f.items;
      const auto out = f.out ? *f.out : (std::filesystem::path(c.out) / "generations.jsonl").string();
      std::cout << pipeline::cmd_generate(c, out).string() << "\n";
    } else if (*score) {
      apply_reward_judge(f, c);
      const auto out = f.out ? *f.out : (std::filesystem::path(c.out) / "rewards.csv").string();
      const auto s = pipeline::cmd_score(c, *f.generations, *f.items, out);
      spdlog::info("score: {} rows, {} without ground truth -> {}", s.rows, s.errors, out);
    } else if (*arena) {
      if (f.models) c.arena.models_dir = *f.models;
      if (f.items) c.arena.items = *f.items;
      const auto r = pipeline::cmd_arena(c);
      for (const auto& row : r.aggregate) {
        spdlog::info("{}: mean Elo {:.1f} [{:.1f}, {:.1f}]", row.model, row.mean_elo, row.min_elo,
                     row.max_elo);
      }
    } else if (*report) {
      for (const auto& p : pipeline::cmd_report(report_in, c.out)) std::cout << p.string() << "\n";
    } else if (*serve_embed) {
      return serve(behavior_of(serve_embed_flags, c.seed), serve_embed_flags.port,
                   serve_embed_flags.host);
    } else if (*serve_judge) {
      return serve(behavior_of(serve_judge_flags, c.seed), serve_judge_flags.port,
                   serve_judge_flags.host);
    }
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
