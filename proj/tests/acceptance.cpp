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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dialeval/datapipe.hpp"
#include "dialeval/dataset_io.hpp"
#include "dialeval/embedding_store.hpp"
#include "dialeval/likelihood.hpp"
#include "dialeval/metrics.hpp"
#include "dialeval/model_io.hpp"
#include "dialeval/synthlab.hpp"
#include "dialeval/trainer.hpp"
#include "mock_embed_server.hpp"
#include "test_util.hpp"

namespace dialeval {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* fmt, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void Check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void Note(const std::string& what) {
    detail += (detail.empty() ? "" : "; ") + what;
  }
};

// --------------------------------------------------------------------------
// 1. Analytic gradients against central differences of an extended-precision
// loss evaluation.

Outcome GradientCorrectness() {
  Outcome out;
  const auto t0 = Clock::now();
  Rng rng = MakeRng(20261016, "acceptance/gradients");
  const auto judges = testing::JudgeNames(5);
  const std::vector<std::string> heads{std::string(kOverallHead)};
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t coords = 0;
  for (int config = 0; config < 50; ++config) {
    const auto items = testing::RandomItems(24, 8, rng);
    const auto table = ItemTable::FromItems(items, 8);
    const auto records = testing::RandomRecords(16, items, judges, heads, rng);
    auto model = testing::RandomModel(8, {6, 4}, judges, heads, rng);
    const auto grads =
        ComputeGradients(records, table, model, heads[0]).heads.at(heads[0]);
    auto check = [&](double& param, double analytic) {
      const double orig = param;
      param = orig + h;
      const double hi = param;
      const long double up = OracleNll(records, table, model, heads[0]);
      param = orig - h;
      const double lo = param;
      const long double down = OracleNll(records, table, model, heads[0]);
      param = orig;
      const double fd = static_cast<double>(
          (up - down) / (static_cast<long double>(hi) - lo));
      const double scale = std::max(std::abs(analytic), std::abs(fd));
      const double rel = scale == 0.0 ? 0.0 : std::abs(analytic - fd) / scale;
      worst = std::max(worst, rel);
      ++coords;
    };
    auto& head = model.heads.at(heads[0]);
    for (std::size_t l = 0; l < head.layers.size(); ++l) {
      auto& layer = head.layers[l];
      for (std::size_t k = 0; k < layer.weights.size(); ++k) {
        check(layer.weights[k], grads.layers[l].weights[k]);
      }
      for (std::size_t k = 0; k < layer.biases.size(); ++k) {
        check(layer.biases[k], grads.layers[l].biases[k]);
      }
    }
    auto& logits = model.panel.heads.at(heads[0]);
    for (std::size_t j = 0; j < judges.size(); ++j) {
      check(logits.alpha_logit[j], grads.reliability.alpha_logit[j]);
      check(logits.beta_logit[j], grads.reliability.beta_logit[j]);
    }
  }
  const double secs = Seconds(t0);
  out.Note(std::to_string(coords) + " coordinates, worst relative error " +
           Fmt("%.2e", worst) + ", " + Fmt("%.1f s", secs));
  out.Check(worst < 1e-6, "relative error < 1e-6");
  out.Check(secs < 60.0, "runtime < 60 s");
  return out;
}

// --------------------------------------------------------------------------
// 2. BatchNll against the product-space oracle.

Outcome OracleEquivalence() {
  Outcome out;
  const auto t0 = Clock::now();
  Rng rng = MakeRng(20261016, "acceptance/oracle");
  const std::vector<std::string> heads{std::string(kOverallHead)};
  double worst = 0.0;
  bool zero_ok = true;
  for (int instance = 0; instance < 100; ++instance) {
    const std::size_t n_judges = 1 + instance % 5;
    const std::size_t n_pairs = 1 + (instance * 7) % 20;
    const auto judges = testing::JudgeNames(n_judges);
    const auto items = testing::RandomItems(10, 4, rng);
    const auto table = ItemTable::FromItems(items, 4);
    const double fair_rate = (instance % 10 == 9) ? 1.0 : 0.3;
    const auto records =
        testing::RandomRecords(n_pairs, items, judges, heads, rng, fair_rate);
    const auto model = testing::RandomModel(4, {5}, judges, heads, rng);
    const double nll = BatchNll(records, table, model, heads[0]);
    const long double oracle = OracleNll(records, table, model, heads[0]);
    if (oracle == 0.0L) {
      zero_ok = zero_ok && nll == 0.0;
      continue;
    }
    worst = std::max(worst, static_cast<double>(std::abs((nll - oracle) / oracle)));
  }
  const double secs = Seconds(t0);
  out.Note("worst relative difference " + Fmt("%.2e", worst) + ", " +
           Fmt("%.2f s", secs));
  out.Check(worst <= 1e-9, "relative agreement <= 1e-9");
  out.Check(zero_ok, "all-Fair instances give exactly 0");
  out.Check(secs < 10.0, "runtime < 10 s");
  return out;
}

// --------------------------------------------------------------------------
// 3-5 share one synthetic dataset.

constexpr double kTrueReliability[] = {0.65, 0.72, 0.80, 0.88, 0.95};

SynthSpec RecoverySpec() {
  SynthSpec spec;
  spec.n_items = 1000;
  spec.n_holdout_items = 200;
  spec.n_pairs = 2000;
  spec.n_holdout_pairs = 2000;
  spec.dim = 16;
  spec.quality_map = "linear";
  spec.sigma_true = 1.0;
  spec.seed = 1;
  for (std::size_t k = 0; k < 5; ++k) {
    spec.judges.push_back({"judge_" + std::to_string(k), kTrueReliability[k],
                           kTrueReliability[k], 0.15});
  }
  return spec;
}

TrainConfig RecoveryRecipe(std::uint64_t seed) {
  TrainConfig config;  // defaults are the reference recipe
  config.epochs = 50;
  config.seed = seed;
  return config;
}

struct Trained {
  TrainResult result;
  FlipCorrection flip;
  double seconds = 0.0;
};

Trained TrainAndCorrect(std::span<const PreferenceRecord> records,
                        const ItemTable& table, const SynthDataset& ds) {
  const auto t0 = Clock::now();
  Trained t{Train(records, table, RecoveryRecipe(1)), {}, 0.0};
  t.seconds = Seconds(t0);
  t.flip = FlipCorrect(t.result.model.panel, ds.true_panel,
                       std::string(kOverallHead));
  return t;
}

// Score under the flip-corrected reading: a flipped panel pairs with the
// negated quality scale.
double CorrectedScore(const Trained& t, std::span<const double> x) {
  const double s =
      QualityScore(t.result.model.Head(std::string(kOverallHead)), x);
  return t.flip.flipped ? -s : s;
}

double HeldOutAccuracy(const Trained& t, const SynthDataset& ds,
                       const ItemTable& table) {
  std::vector<ScoredPair> pairs;
  std::vector<PairDecision> golds;
  for (const auto& lp : ds.holdout_pairs) {
    pairs.push_back(ScoredPair{CorrectedScore(t, table.Get(lp.item_a)),
                               CorrectedScore(t, table.Get(lp.item_b))});
    golds.push_back(lp.latent.at(std::string(kOverallHead)) == 1
                        ? JudgeLabel::kWinB
                        : JudgeLabel::kWinA);
  }
  return PairwiseAccuracyFromScores(pairs, golds, AccuracyMode::kWithoutTie,
                                    0.0);
}

struct RecoveryState {
  SynthDataset ds;
  ItemTable table;
  Trained all;
};

Outcome ReliabilityRecovery(RecoveryState& st) {
  Outcome out;
  const auto t0 = Clock::now();
  const auto spec = RecoverySpec();
  st.ds = Generate(spec);
  st.table = ItemTable::FromItems(st.ds.items, spec.dim);
  st.all = TrainAndCorrect(st.ds.records, st.table, st.ds);
  const auto values =
      ReliabilityValues(st.all.flip.panel, std::string(kOverallHead));
  double worst = 0.0;
  std::ostringstream learned;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto idx = st.ds.true_panel.IndexOf(st.all.flip.panel.judges[k]);
    const double truth = kTrueReliability[idx];
    worst = std::max({worst, std::abs(values[k].alpha - truth),
                      std::abs(values[k].beta - truth)});
    learned << (k ? " " : "") << Fmt("%.3f", values[k].alpha) << "/"
            << Fmt("%.3f", values[k].beta);
  }
  // Ordering by mean reliability must match the true ordering.
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a].alpha + values[a].beta < values[b].alpha + values[b].beta;
  });
  bool ordered = true;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const auto ta = st.ds.true_panel.IndexOf(st.all.flip.panel.judges[order[k]]);
    const auto tb =
        st.ds.true_panel.IndexOf(st.all.flip.panel.judges[order[k + 1]]);
    ordered = ordered && kTrueReliability[ta] < kTrueReliability[tb];
  }
  const double secs = Seconds(t0);
  out.Note("alpha/beta " + learned.str() + (st.all.flip.flipped ? " (flipped)" : "") +
           ", worst |error| " + Fmt("%.3f", worst) + ", " +
           Fmt("%.1f s", secs));
  out.Check(worst <= 0.08, "every |error| <= 0.08");
  out.Check(ordered, "reliability ordering matches truth");
  out.Check(secs < 120.0, "runtime < 120 s");
  return out;
}

Outcome QualityRecovery(const RecoveryState& st) {
  Outcome out;
  std::vector<double> learned, truth;
  const auto& q = st.ds.qualities.at(std::string(kOverallHead));
  for (std::size_t i = st.ds.n_train_items; i < st.ds.items.size(); ++i) {
    learned.push_back(CorrectedScore(st.all, st.ds.items[i].embedding));
    truth.push_back(q[i]);
  }
  const double rho = Spearman(learned, truth);
  const double acc = HeldOutAccuracy(st.all, st.ds, st.table);
  out.Note("spearman " + Fmt("%.4f", rho) + " over " +
           std::to_string(learned.size()) + " held-out items, without_tie " +
           Fmt("%.2f", acc) + " over " +
           std::to_string(st.ds.holdout_pairs.size()) + " held-out pairs");
  out.Check(rho >= 0.90, "spearman >= 0.90");
  out.Check(acc >= 85.0, "without_tie accuracy >= 85");
  return out;
}

Outcome MultiJudgeAdvantage(const RecoveryState& st) {
  Outcome out;
  double seconds = st.all.seconds;
  const double multi = HeldOutAccuracy(st.all, st.ds, st.table);
  std::vector<double> singles;
  for (const auto& judge : st.ds.true_panel.judges) {
    std::vector<PreferenceRecord> only;
    for (auto r : st.ds.records) {
      auto labels = r.labels.at(judge);
      r.labels.clear();
      r.labels[judge] = labels;
      only.push_back(std::move(r));
    }
    const auto t = TrainAndCorrect(only, st.table, st.ds);
    seconds += t.seconds;
    singles.push_back(HeldOutAccuracy(t, st.ds, st.table));
  }
  const double best = *std::max_element(singles.begin(), singles.end());
  const double mean =
      std::accumulate(singles.begin(), singles.end(), 0.0) / singles.size();
  std::ostringstream s;
  for (std::size_t k = 0; k < singles.size(); ++k) {
    s << (k ? " " : "") << Fmt("%.2f", singles[k]);
  }
  out.Note("all judges " + Fmt("%.2f", multi) + ", single judges " + s.str() +
           " (best " + Fmt("%.2f", best) + ", mean " + Fmt("%.2f", mean) +
           "), " + Fmt("%.1f s", seconds));
  out.Check(multi >= best - 1.0, "all-judge accuracy >= best single - 1");
  out.Check(multi > mean, "all-judge accuracy > mean single");
  out.Check(seconds < 360.0, "runtime < 360 s");
  return out;
}

// --------------------------------------------------------------------------
// 6. Exact invariants.

Outcome ExactInvariants() {
  Outcome out;
  Rng rng = MakeRng(20261016, "acceptance/invariants");
  const auto judges = testing::JudgeNames(5);
  const std::string overall(kOverallHead);
  const std::vector<std::string> heads{overall};

  double worst_anti = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto items = testing::RandomItems(2, 8, rng, 1.0 + trial % 7);
    const auto model = testing::RandomModel(8, {6, 4}, judges, heads, rng);
    const auto& head = model.Head(overall);
    worst_anti = std::max(
        worst_anti, std::abs(PreferenceProbability(head, items[0], items[1]) +
                             PreferenceProbability(head, items[1], items[0]) -
                             1.0));
  }
  out.Check(worst_anti <= 1e-12, "antisymmetry within 1e-12");

  const auto items = testing::RandomItems(20, 8, rng);
  const auto table = ItemTable::FromItems(items, 8);
  auto model = testing::RandomModel(8, {6, 4}, judges, heads, rng);

  const auto all_fair = testing::RandomRecords(8, items, judges, heads, rng, 1.0);
  const auto fair_result = BatchNllAndGradients(all_fair, table, model, overall);
  bool fair_zero = fair_result.nll == 0.0;
  const auto& fg = fair_result.gradients.heads.at(overall);
  for (const auto& layer : fg.layers) {
    for (double v : layer.weights) fair_zero = fair_zero && v == 0.0;
    for (double v : layer.biases) fair_zero = fair_zero && v == 0.0;
  }
  for (double v : fg.reliability.alpha_logit) fair_zero = fair_zero && v == 0.0;
  for (double v : fg.reliability.beta_logit) fair_zero = fair_zero && v == 0.0;
  out.Check(fair_zero, "all-Fair records give exactly zero loss and gradient");

  const auto records = testing::RandomRecords(16, items, judges, heads, rng);
  auto half = model;
  half.panel = JudgePanel::Uniform(judges, heads, 0.5);
  const auto hg = ComputeGradients(records, table, half, overall).heads.at(overall);
  bool omega_zero = true;
  for (const auto& layer : hg.layers) {
    for (double v : layer.weights) omega_zero = omega_zero && v == 0.0;
    for (double v : layer.biases) omega_zero = omega_zero && v == 0.0;
  }
  bool rel_nonzero = false;
  for (double v : hg.reliability.alpha_logit) rel_nonzero = rel_nonzero || v != 0.0;
  out.Check(omega_zero, "head gradient exactly 0 at alpha = beta = 0.5");
  out.Check(rel_nonzero, "reliability gradient non-zero at alpha = beta = 0.5");

  auto flipped = model;
  auto& out_layer = flipped.heads.at(overall).layers.back();
  for (double& w : out_layer.weights) w = -w;
  for (double& b : out_layer.biases) b = -b;
  auto& fl = flipped.panel.heads.at(overall);
  const auto& ol = model.panel.Head(overall);
  for (std::size_t j = 0; j < judges.size(); ++j) {
    // (alpha, beta) -> (1 - beta, 1 - alpha) is a negation in logit space.
    fl.alpha_logit[j] = -ol.beta_logit[j];
    fl.beta_logit[j] = -ol.alpha_logit[j];
  }
  const double flip_diff = std::abs(BatchNll(records, table, model, overall) -
                                    BatchNll(records, table, flipped, overall));
  out.Check(flip_diff <= 1e-10, "label-flip symmetry within 1e-10");

  SynthSpec spec;
  spec.n_items = 40;
  spec.n_pairs = 120;
  spec.dim = 8;
  spec.seed = 5;
  spec.judges = {{"x", 0.9, 0.85, 0.1}, {"y", 0.7, 0.75, 0.2}};
  const auto ds = Generate(spec);
  const auto dtable = ItemTable::FromItems(ds.items, spec.dim);
  TrainConfig config;
  config.epochs = 3;
  config.hidden_dims = {16, 8};
  config.seed = 11;
  const auto dir = testing::TempDir("acceptance_determinism");
  WriteModel(dir / "a.mtde", Train(ds.records, dtable, config).model);
  WriteModel(dir / "b.mtde", Train(ds.records, dtable, config).model);
  const bool identical =
      ReadFileBytes(dir / "a.mtde") == ReadFileBytes(dir / "b.mtde");
  std::filesystem::remove_all(dir);
  out.Check(identical, "seeded training writes byte-identical model files");

  out.Note("antisymmetry " + Fmt("%.1e", worst_anti) + ", flip " +
           Fmt("%.1e", flip_diff));
  return out;
}

// --------------------------------------------------------------------------
// 7. Protocol suite.

HeadLabels Sheet(std::initializer_list<std::pair<const char*, const char*>> non_fair) {
  HeadLabels sheet;
  for (const auto head : kAllHeads) sheet[std::string(head)] = JudgeLabel::kFair;
  for (const auto& [head, label] : non_fair) sheet[head] = ParseLabel(label);
  return sheet;
}

Outcome ProtocolSuite() {
  Outcome out;
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  const double p = Pearson(x, y), s = Spearman(x, y);
  out.Check(std::abs(p - 0.8) <= 1e-12, "pearson 0.8");
  out.Check(std::abs(s - 0.8) <= 1e-12, "spearman 0.8");

  out.Check(DecideNormalized(0.723, 0.674, 0.01) == JudgeLabel::kWinA,
            "normalized 0.723 vs 0.674 at tau 0.01 decides A");
  const double raw_a = std::sqrt(2.0) * Logit(0.723);
  const double raw_b = std::sqrt(2.0) * Logit(0.674);
  out.Check(DecidePairwise(raw_a, raw_b, 0.01) == JudgeLabel::kWinA,
            "raw scores mapping to 0.723 / 0.674 decide A");

  // Inline judge sheets from a worked training example, five judges.
  const std::vector<std::pair<std::string, HeadLabels>> sheets{
      {"{\n Accuracy: Fair, Logicality: B, Conversationality: A, Relevance: "
       "Fair,\n Personalization: A, Creativity: A, Interactivity: Fair, "
       "Emotionality: A,\n Informativeness: Fair, Safety: Fair, Overall: A }",
       Sheet({{"Logicality", "B"}, {"Conversationality", "A"},
              {"Personalization", "A"}, {"Creativity", "A"},
              {"Emotionality", "A"}, {"Overall", "A"}})},
      {"{\n Accuracy: Fair, Logicality: Fair, Conversationality: Fair, "
       "Relevance: Fair,\n Personalization: Fair, Creativity: A, "
       "Interactivity: Fair, Emotionality: Fair,\n Informativeness: Fair, "
       "Safety: Fair, Overall: A }",
       Sheet({{"Creativity", "A"}, {"Overall", "A"}})},
      {"{\n Accuracy: Fair, Logicality: Fair, Conversationality: A, "
       "Relevance: Fair,\n Personalization: A, Creativity: A, Interactivity: "
       "Fair, Emotionality: A,\n Informativeness: Fair, Safety: Fair, "
       "Overall: A }",
       Sheet({{"Conversationality", "A"}, {"Personalization", "A"},
              {"Creativity", "A"}, {"Emotionality", "A"}, {"Overall", "A"}})},
      {"{\n Accuracy: Fair, Logicality: Fair, Conversationality: A, "
       "Relevance: Fair,\n Personalization: A, Creativity: A, Interactivity: "
       "Fair, Emotionality: Fair,\n Informativeness: Fair, Safety: Fair, "
       "Overall: A }",
       Sheet({{"Conversationality", "A"}, {"Personalization", "A"},
              {"Creativity", "A"}, {"Overall", "A"}})},
      {"{\n Accuracy: Fair, Logicality: Fair, Conversationality: A, "
       "Relevance: Fair,\n Personalization: Fair, Creativity: A, "
       "Interactivity: Fair, Emotionality: Fair,\n Informativeness: Fair, "
       "Safety: Fair, Overall: A }",
       Sheet({{"Conversationality", "A"}, {"Creativity", "A"},
              {"Overall", "A"}})},
  };
  bool sheets_ok = true;
  for (const auto& [text, expected] : sheets) {
    const auto parsed = ParseAnnotation(text, ParseMode::kLenient);
    sheets_ok = sheets_ok && parsed.labels == expected;
    // The canonical rendering must parse back strictly to the same sheet.
    sheets_ok = sheets_ok &&
                ParseAnnotation(RenderSheet(parsed), ParseMode::kStrict) == parsed;
  }
  out.Check(sheets_ok, "five inline judge sheets parse exactly");

  Rng rng = MakeRng(20261016, "acceptance/balance");
  bool ratio_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const auto items = testing::RandomItems(30, 2, rng);
    const auto records = testing::RandomRecords(
        200 + 37 * trial, items, testing::JudgeNames(3),
        {std::string(kOverallHead)}, rng, 0.1 + 0.04 * trial);
    const auto kept = BalanceLabels(records, std::string(kOverallHead),
                                    LabelRatios{}, trial);
    std::size_t n[3] = {0, 0, 0};
    for (const auto& r : kept) {
      ++n[static_cast<int>(MajorityLabel(r, std::string(kOverallHead)))];
    }
    const double total = static_cast<double>(kept.size());
    ratio_ok = ratio_ok && std::abs(n[0] - 0.4 * total) <= 1.0 &&
               std::abs(n[1] - 0.4 * total) <= 1.0 &&
               std::abs(n[2] - 0.2 * total) <= 1.0;
  }
  out.Check(ratio_ok, "balanced subsets within one record of 40/40/20");
  out.Note("pearson " + Fmt("%.12f", p) + ", spearman " + Fmt("%.12f", s));
  return out;
}

// --------------------------------------------------------------------------
// 8. End-to-end CLI.

struct Run {
  int code = -1;
  std::string output;
};

Run Cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(DIALEVAL_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  r.output.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

Outcome CliRoundTrip() {
  Outcome out;
  const auto dir = testing::TempDir("acceptance_cli");
  const auto log = dir / "log.txt";
  const std::string spec = std::string(DIALEVAL_SOURCE_DIR) + "/data/tiny_spec.json";
  const std::string cfg = "--config " + spec + " ";
  const std::string sim = (dir / "sim").string();
  const auto t0 = Clock::now();

  auto step = [&](const std::string& name, const std::string& args) {
    const auto r = Cli(cfg + args, log);
    out.Check(r.code == 0, name + " exit " + std::to_string(r.code) + ": " + r.output);
    return r;
  };
  step("simulate", "simulate --out " + sim);
  step("prepare", "prepare --labels " + sim + "/labels.jsonl --swaps " + sim +
                      "/swaps.jsonl --dialogues " + sim +
                      "/dialogues.jsonl --out " + (dir / "prepared.jsonl").string());
  step("train", "train --labels " + (dir / "prepared.jsonl").string() +
                    " --store " + sim + "/embeddings.mtdv --out " +
                    (dir / "model.mtde").string());
  const std::string model_store = " --model " + (dir / "model.mtde").string() +
                                  " --store " + sim + "/embeddings.mtdv";
  step("eval pairwise", "eval" + model_store + " --gold " + sim +
                            "/gold_pairwise.jsonl --protocol pairwise --out " +
                            (dir / "pairwise.json").string());
  step("eval rating", "eval" + model_store + " --gold " + sim +
                          "/gold_rating.jsonl --protocol rating --out " +
                          (dir / "rating.json").string());
  step("score", "score" + model_store + " --pairs " + sim +
                    "/gold_pairwise.jsonl --out " + (dir / "scores.jsonl").string());
  const double secs = Seconds(t0);
  out.Check(secs < 60.0, "round-trip under 60 s");

  std::size_t reports = 0;
  for (const char* name : {"pairwise.json", "rating.json"}) {
    std::ifstream in(dir / name);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    const auto problem = ValidateReportJson(j);
    out.Check(problem.empty(), std::string(name) + " schema: " + problem);
    reports += problem.empty();
  }
  std::size_t score_lines = 0;
  bool scores_ok = true;
  ForEachJsonLine(dir / "scores.jsonl", [&](const nlohmann::json& j, std::size_t) {
    ++score_lines;
    scores_ok = scores_ok && j.contains("pair_id") && j.contains("decision") &&
                j["score_a"].is_number() && j["score_b"].is_number();
  });
  out.Check(scores_ok && score_lines > 0, "score lines well formed");

  // Embedding against a scripted local endpoint: two 503s, then success.
  {
    testing::MockEmbedServer server(4);
    server.FailNext(2, 503);
    const std::string embed_args =
        "embed --dialogues " + sim + "/dialogues.jsonl --out " +
        (dir / "embedded.mtdv").string() + " --embed.base_url " + server.url() +
        " --embed.cache_dir " + (dir / "cache").string() +
        " --embed.backoff_base_ms 1 --embed.batch_size 1000";
    const auto first = Cli(cfg + embed_args, log);
    out.Check(first.code == 0, "embed with retries exit " +
                                   std::to_string(first.code) + ": " + first.output);
    out.Check(server.requests() == 3, "exactly 3 attempts (saw " +
                                          std::to_string(server.requests()) + ")");
    bool crc_ok = true;
    try {
      const auto store = ReadEmbeddingStore(dir / "embedded.mtdv");
      crc_ok = store.dim() == 4 && store.rows() > 0;
    } catch (const Error&) {
      crc_ok = false;
    }
    out.Check(crc_ok, "embedded store passes CRC validation");
    const auto second = Cli(cfg + embed_args, log);
    out.Check(second.code == 0 &&
                  second.output.find("network calls: 0") != std::string::npos,
              "cached rerun makes no network calls");
    out.Check(server.requests() == 3, "no requests on the cached rerun");
  }
  // Nothing listens on the closed port now; an empty cache must fail with 3.
  {
    int port = 0;
    {
      testing::MockEmbedServer probe(4);
      port = std::stoi(probe.url().substr(probe.url().rfind(':') + 1));
    }
    const auto r = Cli(cfg + "embed --dialogues " + sim + "/dialogues.jsonl --out " +
                           (dir / "none.mtdv").string() +
                           " --embed.base_url http://127.0.0.1:" +
                           std::to_string(port) + " --embed.cache_dir " +
                           (dir / "empty_cache").string() +
                           " --embed.backoff_base_ms 1 --embed.max_retries 1",
                       log);
    out.Check(r.code == 3, "unreachable endpoint exits 3 (got " +
                               std::to_string(r.code) + ")");
  }
  out.Note(std::to_string(reports) + " schema-valid reports, " +
           std::to_string(score_lines) + " score lines, round-trip " +
           Fmt("%.1f s", secs));
  std::filesystem::remove_all(dir);
  return out;
}

}  // namespace
}  // namespace dialeval

int main() {
  using namespace dialeval;
  int failed = 0;
  auto report = [&](int n, const char* name, const Outcome& o) {
    std::printf("CRITERION %d %s: %s (%s)\n", n, o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };
  auto guarded = [&](auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      Outcome o;
      o.Check(false, std::string("exception: ") + e.what());
      return o;
    }
  };
  report(1, "gradient correctness", guarded(GradientCorrectness));
  report(2, "oracle equivalence", guarded(OracleEquivalence));
  RecoveryState st;
  const auto rel = guarded([&] { return ReliabilityRecovery(st); });
  report(3, "reliability recovery", rel);
  report(4, "quality recovery", guarded([&] { return QualityRecovery(st); }));
  report(5, "multi-judge advantage",
         guarded([&] { return MultiJudgeAdvantage(st); }));
  report(6, "exact invariants", guarded(ExactInvariants));
  report(7, "protocol suite", guarded(ProtocolSuite));
  report(8, "end-to-end CLI", guarded(CliRoundTrip));
  std::printf("%d of 8 criteria failed\n", failed);
  return failed;
}
