// Copyright 2026 The dialeval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The dialeval command line: prepare, embed, train, eval, score, simulate.
//
// Every command resolves its configuration (defaults, --config file, then
// flags) before touching data. Exit codes: 0 success, 2 configuration or data
// error, 3 network failure, 4 numeric failure.

#ifndef DIALEVAL_COMMANDS_HPP_
#define DIALEVAL_COMMANDS_HPP_

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dialeval/datapipe.hpp"
#include "dialeval/dataset_io.hpp"
#include "dialeval/embed_client.hpp"
#include "dialeval/embedding_store.hpp"
#include "dialeval/metrics.hpp"
#include "dialeval/model_io.hpp"
#include "dialeval/run_config.hpp"
#include "dialeval/synthlab.hpp"
#include "dialeval/trainer.hpp"

namespace dialeval {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNetwork = 3;
inline constexpr int kExitNumeric = 4;

inline int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNetwork: return kExitNetwork;
    case ErrorKind::kNumeric: return kExitNumeric;
    default: return kExitConfig;
  }
}

namespace cli {

struct Context {
  nlohmann::json cfg;
  std::ostream& out;
  std::ostream& err;
  bool quiet() const { return cfg.at("quiet").get<bool>(); }
  std::string Path(const std::string& key) const {
    return cfg.at("paths").at(key).get<std::string>();
  }
  std::string OutPath() const { return cfg.at("out").get<std::string>(); }
  // Informational output, silenced by --quiet.
  std::ostream& Info() {
    static std::ostream null_stream(nullptr);
    return quiet() ? null_stream : out;
  }
};

inline std::string Required(const Context& ctx, const std::string& key,
                            const std::string& flag) {
  auto p = ctx.Path(key);
  if (p.empty()) Fail(ErrorKind::kInvalidArgument, "missing " + flag);
  if (!std::filesystem::is_regular_file(p)) {
    Fail(ErrorKind::kInvalidArgument, flag + " file not found: " + p);
  }
  return p;
}

inline std::string Optional(const Context& ctx, const std::string& key,
                            const std::string& flag) {
  auto p = ctx.Path(key);
  if (!p.empty() && !std::filesystem::is_regular_file(p)) {
    Fail(ErrorKind::kInvalidArgument, flag + " file not found: " + p);
  }
  return p;
}

inline std::string RequiredOut(const Context& ctx) {
  auto p = ctx.OutPath();
  if (p.empty()) Fail(ErrorKind::kInvalidArgument, "missing --out");
  return p;
}

inline nlohmann::json RunMeta(const Context& ctx, std::string_view command) {
  return {{"command", command},
          {"config", ctx.cfg},
          {"config_digest", ConfigDigest(ctx.cfg)}};
}

// JSONL and binary outputs carry their run metadata in a sidecar.
inline void WriteMetaSidecar(const Context& ctx, std::string_view command,
                             const std::string& path) {
  WriteFileAtomic(path + ".meta.json", RunMeta(ctx, command).dump(2) + "\n");
}

inline std::string Fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::vector<double> RowF64(const EmbeddingStore& store,
                                  const std::string& id) {
  auto row = store.Row(id);
  return {row.begin(), row.end()};
}

inline void CheckModelStore(const EvaluatorModel& model,
                            const EmbeddingStore& store) {
  if (model.embedding_dim != store.dim()) {
    throw DimensionError(model.embedding_dim, store.dim(),
                         "model vs embedding store");
  }
}

// ---------------------------------------------------------------------------

inline int Prepare(Context& ctx) {
  const auto labels_path = Required(ctx, "labels", "--labels");
  const auto swaps_path = Optional(ctx, "swaps", "--swaps");
  const auto dialogues_path = Optional(ctx, "dialogues", "--dialogues");
  const auto out_path = RequiredOut(ctx);
  const auto& prep = ctx.cfg.at("prepare");
  const auto ratios_raw = prep.at("ratios").get<std::vector<double>>();
  if (ratios_raw.size() != 3) {
    Fail(ErrorKind::kInvalidArgument, "prepare.ratios needs three values");
  }
  const LabelRatios ratios{ratios_raw[0], ratios_raw[1], ratios_raw[2]};
  const auto balance_head = prep.at("balance_head").get<std::string>();
  const auto max_words = prep.at("max_words").get<std::size_t>();

  auto stage = [&](const std::string& name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), "stage " + name + ": " + e.what());
    }
  };
  auto report = [&](const std::string& name, std::size_t before,
                    std::size_t after) {
    ctx.Info() << name << ": kept " << after << ", dropped " << before - after
               << "\n";
  };

  auto records = stage("read", [&] { return ReadLabels(labels_path); });
  if (!swaps_path.empty()) {
    const auto before = records.size();
    records = stage("position-swap", [&] {
      auto all = records;
      auto swaps = ReadLabels(swaps_path);
      all.insert(all.end(), swaps.begin(), swaps.end());
      return PositionSwapFilter(all);
    });
    report("position-swap", before, records.size());
  }
  if (!dialogues_path.empty()) {
    const auto before = records.size();
    records = stage("length-diff", [&] {
      std::map<std::string, DialogueRecord> by_id;
      for (auto& d : ReadDialogues(dialogues_path)) by_id[d.id] = std::move(d);
      return LengthDiffFilter(records, by_id, max_words);
    });
    report("length-diff", before, records.size());
  }
  if (prep.at("balance").get<bool>()) {
    const auto before = records.size();
    records = stage("balance", [&] {
      return BalanceLabels(records, balance_head, ratios,
                           DeriveSeed(ctx.cfg.at("seed").get<std::uint64_t>(),
                                      "prepare"));
    });
    report("balance", before, records.size());
  }
  WriteLabels(out_path, records);
  WriteMetaSidecar(ctx, "prepare", out_path);
  ctx.Info() << "wrote " << records.size() << " records to " << out_path
             << "\n";
  return kExitOk;
}

inline int Embed(Context& ctx) {
  const auto dialogues_path = Required(ctx, "dialogues", "--dialogues");
  const auto out_path = RequiredOut(ctx);
  const auto endpoint = EndpointConfigFrom(ctx.cfg);
  const auto dialogues = ReadDialogues(dialogues_path);
  const auto result = FetchEmbeddings(endpoint, dialogues);
  WriteEmbeddingStore(out_path, result.store);
  WriteMetaSidecar(ctx, "embed", out_path);
  const double ratio =
      dialogues.empty() ? 1.0
                        : static_cast<double>(result.stats.cache_hits) /
                              static_cast<double>(dialogues.size());
  ctx.Info() << "network calls: " << result.stats.network_calls << "\n";
  ctx.Info() << "cache hits: " << result.stats.cache_hits << "/"
             << dialogues.size() << " (" << Fixed(ratio, 3) << ")\n";
  return kExitOk;
}

inline int TrainCmd(Context& ctx) {
  const auto labels_path = Required(ctx, "labels", "--labels");
  const auto store_path = Required(ctx, "store", "--store");
  const auto out_path = RequiredOut(ctx);
  auto trace_path = ctx.Path("trace");
  if (trace_path.empty()) trace_path = out_path + ".trace.json";
  const auto config = TrainConfigFrom(ctx.cfg);

  const auto ds = LoadPreferenceDataset(labels_path, store_path);
  if (ds.records.empty()) {
    Fail(ErrorKind::kInvalidArgument, labels_path + " has no records");
  }
  bool any_vote = false;
  for (const auto& r : ds.records) {
    for (const auto& h : config.head_selection) {
      if (r.NonFairCount(h) > 0) any_vote = true;
    }
  }
  if (!any_vote) {
    ctx.err << "warning: every label is Fair; the data carries no preference "
               "signal and the model stays at its initialisation\n";
  }
  auto result = Train(ds.records, ds.store.ToItemTable(), config);
  result.model.metadata.config_digest = ConfigDigest(ctx.cfg);
  result.model.metadata.seed = config.seed;
  WriteModel(out_path, result.model);

  auto trace = TraceToJson(result.trace);
  trace["config"] = ctx.cfg;
  trace["config_digest"] = result.model.metadata.config_digest;
  trace["created_at"] = result.model.metadata.created_at;
  WriteFileAtomic(trace_path, trace.dump(2) + "\n");

  for (const auto& head : config.head_selection) {
    const auto values = ReliabilityValues(result.model.panel, head);
    ctx.Info() << "head " << head << ":\n";
    for (std::size_t k = 0; k < values.size(); ++k) {
      ctx.Info() << "  " << result.model.panel.judges[k]
                 << " alpha=" << Fixed(values[k].alpha)
                 << " beta=" << Fixed(values[k].beta) << "\n";
    }
    if (MeanReliability(values) < 0.5) {
      ctx.Info() << "  (mean reliability below 0.5; see flipped_view in the "
                    "trace)\n";
    }
  }
  ctx.Info() << "wrote " << out_path << " and " << trace_path << "\n";
  return kExitOk;
}

struct GoldLine {
  std::size_t line;
  nlohmann::json j;
};

inline std::vector<GoldLine> ReadJsonl(const std::string& path) {
  std::vector<GoldLine> lines;
  ForEachJsonLine(path, [&](const nlohmann::json& j, std::size_t line) {
    lines.push_back({line, j});
  });
  return lines;
}

inline std::string GoldWhere(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

inline int Eval(Context& ctx) {
  const auto model_path = Required(ctx, "model", "--model");
  const auto store_path = Required(ctx, "store", "--store");
  const auto gold_path = Required(ctx, "gold", "--gold");
  const auto& ev = ctx.cfg.at("eval");
  const auto protocol = ev.at("protocol").get<std::string>();
  const auto head_name = ev.at("head").get<std::string>();
  const double tau = ev.at("tie_threshold").get<double>();
  const TieRule rule = ParseTieRule(ev.at("tie_mode").get<std::string>());
  if (protocol != "rating" && protocol != "pairwise" && protocol != "dims") {
    Fail(ErrorKind::kInvalidArgument,
         "unknown protocol " + protocol + " (rating | pairwise | dims)");
  }

  const auto model = ReadModel(model_path);
  const auto store = ReadEmbeddingStore(store_path);
  CheckModelStore(model, store);
  const auto gold = ReadJsonl(gold_path);
  if (gold.empty()) Fail(ErrorKind::kInvalidArgument, gold_path + " is empty");
  auto score = [&](const std::string& head, const std::string& id) {
    return QualityScore(model.Head(head), RowF64(store, id));
  };

  EvalReport report;
  if (protocol == "rating") {
    std::vector<double> pred, truth;
    for (const auto& g : gold) {
      if (!g.j.contains("id") || !g.j.contains("score") ||
          !g.j["score"].is_number()) {
        Fail(ErrorKind::kInvalidArgument,
             GoldWhere(gold_path, g.line) +
                 ": rating gold needs {\"id\", \"score\"}");
      }
      pred.push_back(score(head_name, g.j["id"].get<std::string>()));
      truth.push_back(g.j["score"].get<double>());
    }
    report.single_rating = {Pearson(pred, truth), Spearman(pred, truth)};
  } else if (protocol == "pairwise") {
    std::vector<ScoredPair> pairs;
    std::vector<PairDecision> golds;
    for (const auto& g : gold) {
      if (!g.j.contains("item_a") || !g.j.contains("item_b") ||
          !g.j.contains("gold") || !g.j["gold"].is_string()) {
        Fail(ErrorKind::kInvalidArgument,
             GoldWhere(gold_path, g.line) +
                 ": pairwise gold needs item_a, item_b and a label \"gold\"");
      }
      pairs.push_back({score(head_name, g.j["item_a"].get<std::string>()),
                       score(head_name, g.j["item_b"].get<std::string>())});
      golds.push_back(ParseLabel(g.j["gold"].get<std::string>()));
    }
    report.pairwise = EvalReport::Pairwise{
        PairwiseAccuracyFromScores(pairs, golds, AccuracyMode::kWithTie, tau,
                                   rule),
        PairwiseAccuracyFromScores(pairs, golds, AccuracyMode::kWithoutTie,
                                   tau, rule),
        tau, rule};
  } else {
    std::map<std::string, std::vector<PairDecision>> preds, golds;
    for (const auto& g : gold) {
      if (!g.j.contains("item_a") || !g.j.contains("item_b") ||
          !g.j.contains("gold") || !g.j["gold"].is_object()) {
        Fail(ErrorKind::kInvalidArgument,
             GoldWhere(gold_path, g.line) +
                 ": dims gold needs item_a, item_b and a per-head \"gold\"");
      }
      const auto a = g.j["item_a"].get<std::string>();
      const auto b = g.j["item_b"].get<std::string>();
      for (const auto& [head, label] : g.j["gold"].items()) {
        golds[head].push_back(ParseLabel(label.get<std::string>()));
        preds[head].push_back(
            DecidePairwise(score(head, a), score(head, b), tau, rule));
      }
    }
    for (const auto& [head, v] : golds) {
      if (v.size() != gold.size()) {
        Fail(ErrorKind::kInvalidArgument,
             "dims gold: head " + head + " is missing on some lines");
      }
    }
    report.dimensions = ComputeDimensionAccuracy(preds, golds);
  }

  auto j = ReportToJson(report);
  j["meta"] = RunMeta(ctx, "eval");
  j["meta"]["protocol"] = protocol;
  j["meta"]["n"] = gold.size();
  if (auto problem = ValidateReportJson(j); !problem.empty()) {
    Fail(ErrorKind::kNumeric, "report failed validation: " + problem);
  }
  const auto text = j.dump(2) + "\n";
  if (!ctx.OutPath().empty()) WriteFileAtomic(ctx.OutPath(), text);
  ctx.Info() << ReportToJson(report).dump(2) << "\n";
  return kExitOk;
}

inline int Score(Context& ctx) {
  const auto model_path = Required(ctx, "model", "--model");
  const auto store_path = Required(ctx, "store", "--store");
  const auto items_path = Optional(ctx, "items", "--items");
  const auto pairs_path = Optional(ctx, "pairs", "--pairs");
  if (items_path.empty() == pairs_path.empty()) {
    Fail(ErrorKind::kInvalidArgument, "give exactly one of --items, --pairs");
  }
  const auto& ev = ctx.cfg.at("eval");
  const auto head_name = ev.at("head").get<std::string>();
  const double tau = ev.at("tie_threshold").get<double>();
  const TieRule rule = ParseTieRule(ev.at("tie_mode").get<std::string>());

  const auto model = ReadModel(model_path);
  const auto& head = model.Head(head_name);
  const auto store = ReadEmbeddingStore(store_path);
  CheckModelStore(model, store);
  auto field = [](const GoldLine& g, const std::string& path,
                  const char* key) {
    if (!g.j.contains(key) || !g.j[key].is_string()) {
      Fail(ErrorKind::kInvalidArgument, GoldWhere(path, g.line) +
                                            ": missing string field " + key);
    }
    return g.j[key].get<std::string>();
  };

  std::vector<nlohmann::json> lines;
  if (!items_path.empty()) {
    for (const auto& g : ReadJsonl(items_path)) {
      const auto id = field(g, items_path, "id");
      const double raw = QualityScore(head, RowF64(store, id));
      lines.push_back({{"id", id}, {"raw", raw}, {"normalized", NormalizeScore(raw)}});
    }
  } else {
    for (const auto& g : ReadJsonl(pairs_path)) {
      const auto pair_id = field(g, pairs_path, "pair_id");
      const double sa = QualityScore(head, RowF64(store, field(g, pairs_path, "item_a")));
      const double sb = QualityScore(head, RowF64(store, field(g, pairs_path, "item_b")));
      lines.push_back({{"pair_id", pair_id},
                       {"decision", ToString(DecidePairwise(sa, sb, tau, rule))},
                       {"score_a", sa},
                       {"score_b", sb}});
    }
  }
  const auto text = JsonLines(lines);
  if (ctx.OutPath().empty()) {
    ctx.out << text;
  } else {
    WriteFileAtomic(ctx.OutPath(), text);
    WriteMetaSidecar(ctx, "score", ctx.OutPath());
    ctx.Info() << "scored " << lines.size() << " lines into " << ctx.OutPath()
               << "\n";
  }
  return kExitOk;
}

inline int Simulate(Context& ctx) {
  const auto spec = SynthSpecFrom(ctx.cfg);
  const std::filesystem::path dir = RequiredOut(ctx);
  const auto ds = Generate(spec);
  std::filesystem::create_directories(dir);

  WriteLabels(dir / "labels.jsonl", ds.records);
  EmbeddingStore store(static_cast<std::uint32_t>(spec.dim));
  for (const auto& item : ds.items) {
    store.Add(item.id, std::span<const double>(item.embedding));
  }
  WriteEmbeddingStore(dir / "embeddings.mtdv", store);
  auto truth = GroundTruthJson(spec, ds);
  truth["meta"] = RunMeta(ctx, "simulate");
  WriteFileAtomic(dir / "truth.json", truth.dump(2) + "\n");
  if (spec.emit_swaps) WriteLabels(dir / "swaps.jsonl", ds.swaps);
  if (spec.emit_dialogues) WriteDialogues(dir / "dialogues.jsonl", ds.dialogues);

  // Gold files: held-out items when there are any, else the training items.
  const bool holdout = spec.n_holdout_items > 0;
  const std::size_t lo = holdout ? ds.n_train_items : 0;
  const std::size_t hi = holdout ? ds.items.size() : ds.n_train_items;
  std::vector<nlohmann::json> rating, items;
  const auto& q = ds.qualities.at(std::string(kOverallHead));
  for (std::size_t i = lo; i < hi; ++i) {
    rating.push_back({{"id", ds.items[i].id}, {"score", q[i]}});
    items.push_back({{"id", ds.items[i].id}});
  }
  WriteFileAtomic(dir / "gold_rating.jsonl", JsonLines(rating));
  WriteFileAtomic(dir / "items.jsonl", JsonLines(items));

  auto latent_label = [](int r) {
    return std::string(ToString(r == 1 ? JudgeLabel::kWinB : JudgeLabel::kWinA));
  };
  std::vector<nlohmann::json> pairwise, dims;
  auto add_pair = [&](const std::string& id, const std::string& a,
                      const std::string& b, const std::map<std::string, int>& r) {
    pairwise.push_back({{"pair_id", id},
                        {"item_a", a},
                        {"item_b", b},
                        {"gold", latent_label(r.at(std::string(kOverallHead)))}});
    nlohmann::json per_head = nlohmann::json::object();
    for (const auto& [head, v] : r) per_head[head] = latent_label(v);
    dims.push_back({{"pair_id", id}, {"item_a", a}, {"item_b", b}, {"gold", per_head}});
  };
  if (!ds.holdout_pairs.empty()) {
    for (const auto& lp : ds.holdout_pairs) {
      add_pair(lp.pair_id, lp.item_a, lp.item_b, lp.latent);
    }
  } else {
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
      const auto& r = ds.records[i];
      add_pair(r.pair_id, r.item_a, r.item_b, ds.latent[i]);
    }
  }
  WriteFileAtomic(dir / "gold_pairwise.jsonl", JsonLines(pairwise));
  if (spec.heads.size() > 1) {
    WriteFileAtomic(dir / "gold_dims.jsonl", JsonLines(dims));
  }
  ctx.Info() << "simulated " << ds.records.size() << " pairs over "
             << ds.items.size() << " items into " << dir.string() << "\n";
  if (spec.emit_swaps) {
    ctx.Info() << "swap-consistent pairs: " << ds.swap_consistent_count << "\n";
  }
  return kExitOk;
}

// Turns CLI11 leftovers (--a.b v, --a.b=v) into override pairs.
inline std::vector<std::pair<std::string, std::string>> ParseOverrides(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
      Fail(ErrorKind::kInvalidArgument, "unexpected argument " + arg);
    }
    const auto body = arg.substr(2);
    if (auto eq = body.find('='); eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      out.emplace_back(body, extras[++i]);
    } else {
      Fail(ErrorKind::kInvalidArgument, "flag " + arg + " needs a value");
    }
  }
  return out;
}

}  // namespace cli

inline int RunCli(int argc, const char* const* argv, std::ostream& out,
                  std::ostream& err) {
  CLI::App app{"dialeval: multi-judge dialogue-quality evaluator"};
  app.require_subcommand(1);
  app.allow_extras();
  app.fallthrough();

  std::string config_path, out_flag;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_flag, "output path (directory for simulate)");
  app.add_flag("--quiet", quiet, "suppress informational output");

  // Convenience spellings of common dotted paths.
  struct Alias {
    const char* flag;
    const char* path;
    const char* help;
  };
  const std::vector<std::pair<std::string, std::vector<Alias>>> commands{
      {"prepare",
       {{"--labels", "paths.labels", "labels JSONL"},
        {"--swaps", "paths.swaps", "position-swapped labels JSONL"},
        {"--dialogues", "paths.dialogues", "dialogue texts JSONL"}}},
      {"embed", {{"--dialogues", "paths.dialogues", "dialogue texts JSONL"}}},
      {"train",
       {{"--labels", "paths.labels", "labels JSONL"},
        {"--store", "paths.store", "embedding store"},
        {"--trace", "paths.trace", "trace JSON (default <out>.trace.json)"}}},
      {"eval",
       {{"--model", "paths.model", "model file"},
        {"--store", "paths.store", "embedding store"},
        {"--gold", "paths.gold", "gold JSONL"},
        {"--protocol", "eval.protocol", "rating | pairwise | dims"},
        {"--head", "eval.head", "head used by rating/pairwise"}}},
      {"score",
       {{"--model", "paths.model", "model file"},
        {"--store", "paths.store", "embedding store"},
        {"--items", "paths.items", "JSONL of {\"id\"}"},
        {"--pairs", "paths.pairs", "JSONL of {\"pair_id\", \"item_a\", \"item_b\"}"},
        {"--head", "eval.head", "head to score with"}}},
      {"simulate", {}},
  };
  const std::map<std::string, std::string> descriptions{
      {"prepare", "swap-consistency, length and balance filters"},
      {"embed", "fetch dialogue embeddings into a store"},
      {"train", "fit quality heads and judge reliabilities"},
      {"eval", "score a model against gold labels"},
      {"score", "score items or pairs"},
      {"simulate", "generate a synthetic dataset"},
  };
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::map<std::string, std::string>> alias_values;
  std::map<std::string, std::map<std::string, std::string>> alias_paths;
  for (const auto& [name, aliases] : commands) {
    auto* sub = app.add_subcommand(name, descriptions.at(name));
    sub->allow_extras();
    subs[name] = sub;
    for (const auto& a : aliases) {
      alias_paths[name][a.flag] = a.path;
      sub->add_option(a.flag, alias_values[name][a.flag], a.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    std::string command;
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) command = name;
    }
    auto extras = app.remaining();
    auto sub_extras = subs.at(command)->remaining();
    extras.insert(extras.end(), sub_extras.begin(), sub_extras.end());
    auto overrides = cli::ParseOverrides(extras);
    for (const auto& [flag, value] : alias_values[command]) {
      if (!value.empty()) {
        overrides.emplace_back(alias_paths[command][flag], value);
      }
    }
    if (seed) overrides.emplace_back("seed", std::to_string(*seed));
    if (!out_flag.empty()) overrides.emplace_back("out", out_flag);
    if (quiet) overrides.emplace_back("quiet", "true");
    // Flags are applied after the file, in the order given.
    cli::Context ctx{ResolveRunConfig(config_path, overrides), out, err};

    if (command == "prepare") return cli::Prepare(ctx);
    if (command == "embed") return cli::Embed(ctx);
    if (command == "train") return cli::TrainCmd(ctx);
    if (command == "eval") return cli::Eval(ctx);
    if (command == "score") return cli::Score(ctx);
    return cli::Simulate(ctx);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error (config): " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace dialeval

#endif  // DIALEVAL_COMMANDS_HPP_
