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

// Ground-truth synthetic corpora: items with known latent quality, latent
// preferences drawn from the Thurstone model, and simulated judges with known
// hit / correct-rejection rates. Also the brute-force likelihood oracle.

#ifndef DIALEVAL_SYNTHLAB_HPP_
#define DIALEVAL_SYNTHLAB_HPP_

#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dialeval/core.hpp"
#include "dialeval/datapipe.hpp"
#include "json.hpp"

namespace dialeval {

struct SynthJudge {
  std::string name;
  double alpha = 0.8;
  double beta = 0.8;
  double fair_rate = 0.0;
};

struct SynthSpec {
  std::size_t n_items = 200;          // items that training pairs draw from
  std::size_t n_holdout_items = 0;    // extra items never used in training
  std::size_t n_pairs = 200;
  std::size_t n_holdout_pairs = 0;    // latent-labelled pairs over held-out
  std::size_t dim = 8;
  std::vector<SynthJudge> judges;
  std::string quality_map = "linear";  // "linear" | "quadratic"
  double sigma_true = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> heads{std::string(kOverallHead)};
  bool emit_swaps = false;
  double swap_inconsistency_rate = 0.0;
  bool emit_dialogues = false;
};

inline void ValidateSynthSpec(const SynthSpec& s) {
  auto bad = [](const std::string& what) {
    Fail(ErrorKind::kInvalidArgument, "synth spec: " + what);
  };
  if (s.dim == 0) bad("dim must be positive");
  if (s.n_pairs > 0 && s.n_items < 2) bad("need at least 2 items for pairs");
  if (s.n_holdout_pairs > 0 && s.n_holdout_items < 2) {
    bad("need at least 2 held-out items for held-out pairs");
  }
  if (s.quality_map != "linear" && s.quality_map != "quadratic") {
    bad("quality_map must be linear or quadratic");
  }
  if (!(s.sigma_true > 0)) bad("sigma_true must be positive");
  if (!(s.swap_inconsistency_rate >= 0 && s.swap_inconsistency_rate <= 1)) {
    bad("swap_inconsistency_rate must lie in [0, 1]");
  }
  if (s.emit_swaps && s.judges.empty()) bad("swaps need at least one judge");
  std::set<std::string> names;
  for (const auto& j : s.judges) {
    if (!(j.alpha >= 0 && j.alpha <= 1) || !(j.beta >= 0 && j.beta <= 1)) {
      bad("judge " + j.name + ": alpha/beta must lie in [0, 1]");
    }
    if (!(j.fair_rate >= 0 && j.fair_rate <= 1)) {
      bad("judge " + j.name + ": fair_rate must lie in [0, 1]");
    }
    if (j.name.empty() || !names.insert(j.name).second) {
      bad("judge names must be unique and non-empty");
    }
  }
  std::set<std::string> heads;
  for (const auto& h : s.heads) {
    if (!IsKnownHead(h) || !heads.insert(h).second) bad("bad head list");
  }
  if (!heads.count(std::string(kOverallHead))) bad("heads must include Overall");
}

// Fair with probability fair_rate; otherwise the alpha/beta channel:
// r = 1 yields B with probability alpha, r = 0 yields A with probability beta.
inline JudgeLabel SimulateJudge(int latent_r, double alpha, double beta,
                                double fair_rate, Rng& rng) {
  if (Uniform01(rng) < fair_rate) return JudgeLabel::kFair;
  const double u = Uniform01(rng);
  if (latent_r == 1) return u < alpha ? JudgeLabel::kWinB : JudgeLabel::kWinA;
  return u < beta ? JudgeLabel::kWinA : JudgeLabel::kWinB;
}

struct LatentPair {
  std::string pair_id;
  std::string item_a;
  std::string item_b;
  std::map<std::string, int> latent;  // head -> r
};

struct SynthDataset {
  std::vector<EmbeddedItem> items;  // training items first, then held-out
  std::size_t n_train_items = 0;
  std::map<std::string, std::vector<double>> qualities;  // head -> per item
  std::map<std::string, std::vector<double>> w_star;
  std::map<std::string, std::vector<double>> v_star;  // quadratic part
  std::vector<PreferenceRecord> records;
  std::vector<std::map<std::string, int>> latent;  // per record, head -> r
  std::vector<LatentPair> holdout_pairs;
  JudgePanel true_panel;
  std::vector<PreferenceRecord> swaps;
  std::size_t swap_consistent_count = 0;
  std::vector<DialogueRecord> dialogues;
};

inline std::string SynthItemId(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "item_%06zu", i);
  return buf;
}

namespace internal {

inline double TrueQuality(std::span<const double> x, const std::vector<double>& w,
                          const std::vector<double>& v, bool quadratic) {
  double lin = 0.0, proj = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    lin += w[k] * x[k];
    if (quadratic) proj += v[k] * x[k];
  }
  return quadratic ? lin + 0.5 * proj * proj / std::sqrt(double(x.size()))
                   : lin;
}

inline int DrawLatent(double qa, double qb, double sigma, Rng& rng) {
  const double p = NormalCdf(PreferenceZ(qa, qb, sigma));
  return Uniform01(rng) < p ? 1 : 0;
}

inline std::pair<std::size_t, std::size_t> DrawPair(std::size_t lo,
                                                    std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t a = pick(rng);
  std::size_t b = pick(rng);
  while (b == a) b = pick(rng);
  return {lo + a, lo + b};
}

inline DialogueRecord SyntheticDialogue(const std::string& id, Rng& rng) {
  std::uniform_int_distribution<int> turns(2, 4);
  std::uniform_int_distribution<int> words(4, 14);
  DialogueRecord d;
  d.id = id;
  const int n = turns(rng);
  for (int t = 0; t < n; ++t) {
    d.turns.push_back({Speaker::kHuman, "question " + std::to_string(t)});
    std::string reply;
    const int w = words(rng);
    for (int k = 0; k < w; ++k) reply += (k ? " w" : "w") + std::to_string(k);
    d.turns.push_back({Speaker::kAssistant, reply});
  }
  return d;
}

}  // namespace internal

inline SynthDataset Generate(const SynthSpec& spec) {
  ValidateSynthSpec(spec);
  SynthDataset ds;
  const bool quadratic = spec.quality_map == "quadratic";
  const std::size_t total_items = spec.n_items + spec.n_holdout_items;
  ds.n_train_items = spec.n_items;

  Rng item_rng = MakeRng(spec.seed, "items");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < total_items; ++i) {
    EmbeddedItem item{SynthItemId(i), std::vector<double>(spec.dim)};
    for (double& v : item.embedding) v = normal(item_rng);
    ds.items.push_back(std::move(item));
  }

  for (const auto& head : spec.heads) {
    Rng q_rng = MakeRng(spec.seed, "quality/" + head);
    auto& w = ds.w_star[head];
    auto& v = ds.v_star[head];
    w.resize(spec.dim);
    v.resize(spec.dim);
    for (double& x : w) x = normal(q_rng);
    for (double& x : v) x = normal(q_rng);
    if (!quadratic) v.assign(spec.dim, 0.0);
    auto& q = ds.qualities[head];
    for (const auto& item : ds.items) {
      q.push_back(internal::TrueQuality(item.embedding, w, v, quadratic));
    }
  }

  std::vector<std::string> judge_names;
  for (const auto& j : spec.judges) judge_names.push_back(j.name);
  ds.true_panel = JudgePanel::Uniform(judge_names, spec.heads, 0.5);
  for (auto& [head, logits] : ds.true_panel.heads) {
    for (std::size_t k = 0; k < spec.judges.size(); ++k) {
      // Logit of 0 or 1 is infinite; the true panel is for reporting only.
      logits.alpha_logit[k] = Logit(spec.judges[k].alpha);
      logits.beta_logit[k] = Logit(spec.judges[k].beta);
    }
  }

  Rng pair_rng = MakeRng(spec.seed, "pairs");
  Rng latent_rng = MakeRng(spec.seed, "latent");
  Rng judge_rng = MakeRng(spec.seed, "judges");
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    const auto [a, b] = internal::DrawPair(0, spec.n_items, pair_rng);
    PreferenceRecord rec;
    char buf[32];
    std::snprintf(buf, sizeof buf, "pair_%06zu", i);
    rec.pair_id = buf;
    rec.item_a = ds.items[a].id;
    rec.item_b = ds.items[b].id;
    std::map<std::string, int> latent;
    for (const auto& head : spec.heads) {
      const auto& q = ds.qualities[head];
      const int r = internal::DrawLatent(q[a], q[b], spec.sigma_true, latent_rng);
      latent[head] = r;
      for (const auto& j : spec.judges) {
        rec.labels[j.name][head] =
            SimulateJudge(r, j.alpha, j.beta, j.fair_rate, judge_rng);
      }
    }
    ds.records.push_back(std::move(rec));
    ds.latent.push_back(std::move(latent));
  }

  Rng holdout_rng = MakeRng(spec.seed, "holdout");
  for (std::size_t i = 0; i < spec.n_holdout_pairs; ++i) {
    const auto [a, b] =
        internal::DrawPair(spec.n_items, spec.n_holdout_items, holdout_rng);
    LatentPair lp;
    char buf[32];
    std::snprintf(buf, sizeof buf, "heldout_%06zu", i);
    lp.pair_id = buf;
    lp.item_a = ds.items[a].id;
    lp.item_b = ds.items[b].id;
    for (const auto& head : spec.heads) {
      const auto& q = ds.qualities[head];
      lp.latent[head] =
          internal::DrawLatent(q[a], q[b], spec.sigma_true, holdout_rng);
    }
    ds.holdout_pairs.push_back(std::move(lp));
  }

  if (spec.emit_swaps) {
    Rng swap_rng = MakeRng(spec.seed, "swaps");
    std::uniform_int_distribution<std::size_t> pick_judge(
        0, spec.judges.size() - 1);
    for (const auto& rec : ds.records) {
      PreferenceRecord sw;
      sw.pair_id = rec.pair_id + std::string(kSwapSuffix);
      sw.item_a = rec.item_b;
      sw.item_b = rec.item_a;
      for (const auto& [judge, heads] : rec.labels) {
        for (const auto& [head, label] : heads) {
          sw.labels[judge][head] = Mirror(label);
        }
      }
      if (Uniform01(swap_rng) < spec.swap_inconsistency_rate) {
        // Break the mirror for one judge's Overall label.
        const auto& judge = spec.judges[pick_judge(swap_rng)].name;
        const JudgeLabel orig = rec.labels.at(judge).at(std::string(kOverallHead));
        sw.labels[judge][std::string(kOverallHead)] =
            orig == JudgeLabel::kFair ? JudgeLabel::kWinA : orig;
      } else {
        ++ds.swap_consistent_count;
      }
      ds.swaps.push_back(std::move(sw));
    }
  }

  if (spec.emit_dialogues) {
    Rng dlg_rng = MakeRng(spec.seed, "dialogues");
    for (const auto& item : ds.items) {
      ds.dialogues.push_back(internal::SyntheticDialogue(item.id, dlg_rng));
    }
  }
  return ds;
}

inline nlohmann::json GroundTruthJson(const SynthSpec& spec,
                                      const SynthDataset& ds) {
  using nlohmann::json;
  json j;
  j["w_star"] = ds.w_star;
  if (spec.quality_map == "quadratic") j["v_star"] = ds.v_star;
  j["quality_map"] = spec.quality_map;
  j["sigma_true"] = spec.sigma_true;
  j["seed"] = spec.seed;
  j["judges"] = json::array();
  for (const auto& judge : spec.judges) {
    j["judges"].push_back({{"name", judge.name},
                           {"alpha", judge.alpha},
                           {"beta", judge.beta},
                           {"fair_rate", judge.fair_rate}});
  }
  j["n_train_items"] = ds.n_train_items;
  if (spec.emit_swaps) j["swap_consistent_count"] = ds.swap_consistent_count;
  json latent = json::object();
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    latent[ds.records[i].pair_id] = ds.latent[i];
  }
  j["latent"] = latent;
  return j;
}

// ---------------------------------------------------------------------------
// Brute-force likelihood oracle: straight product-space evaluation of
//   prod_i [A_i P_i + B_i (1 - P_i)]
// in long double, with its own forward pass. Independent of likelihood.hpp.

inline constexpr std::size_t kOracleMaxJudges = 10;

inline long double OracleScore(const QualityHead& head,
                               std::span<const double> x) {
  std::vector<long double> act(x.begin(), x.end());
  for (std::size_t l = 0; l < head.layers.size(); ++l) {
    const auto& layer = head.layers[l];
    std::vector<long double> next(layer.rows);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      long double s = layer.biases[r];
      for (std::size_t c = 0; c < layer.cols; ++c) {
        s += static_cast<long double>(layer.weights[r * layer.cols + c]) * act[c];
      }
      next[r] = (l + 1 < head.layers.size()) ? std::tanh(s) : s;
    }
    act = std::move(next);
  }
  return act[0];
}

inline long double OracleNll(std::span<const PreferenceRecord> records,
                             const ItemTable& items,
                             const EvaluatorModel& model,
                             const std::string& head_name) {
  const auto& head = model.Head(head_name);
  const auto& logits = model.panel.Head(head_name);
  const auto& judges = model.panel.judges;
  if (judges.size() > kOracleMaxJudges) {
    Fail(ErrorKind::kInvalidArgument,
         "oracle is for small instances (at most 10 judges)");
  }
  long double nll = 0.0L;
  for (const auto& rec : records) {
    if (!rec.HasHead(head_name)) {
      Fail(ErrorKind::kInvalidArgument,
           "record " + rec.pair_id + ": no label for head " + head_name);
    }
    long double prod_a = 1.0L, prod_b = 1.0L;
    std::size_t voters = 0;
    for (std::size_t j = 0; j < judges.size(); ++j) {
      auto jt = rec.labels.find(judges[j]);
      if (jt == rec.labels.end()) continue;
      auto ht = jt->second.find(head_name);
      if (ht == jt->second.end() || ht->second == JudgeLabel::kFair) continue;
      const long double alpha =
          1.0L / (1.0L + std::exp(-static_cast<long double>(logits.alpha_logit[j])));
      const long double beta =
          1.0L / (1.0L + std::exp(-static_cast<long double>(logits.beta_logit[j])));
      const int y = ht->second == JudgeLabel::kWinB ? 1 : 0;
      prod_a *= y ? alpha : (1.0L - alpha);
      prod_b *= y ? (1.0L - beta) : beta;
      ++voters;
    }
    if (voters == 0) continue;
    const long double fa = OracleScore(head, items.Get(rec.item_a));
    const long double fb = OracleScore(head, items.Get(rec.item_b));
    const long double z =
        (fb - fa) / (std::sqrt(2.0L) * static_cast<long double>(head.sigma));
    const long double lo = kProbabilityFloor;
    const long double p = std::clamp(0.5L * std::erfc(-z / std::sqrt(2.0L)), lo, 1.0L - lo);
    const long double q = std::clamp(0.5L * std::erfc(z / std::sqrt(2.0L)), lo, 1.0L - lo);
    const long double mix = prod_a * p + prod_b * q;
    if (!(mix > 0.0L)) {
      Fail(ErrorKind::kNumeric, "oracle product underflowed for record " +
                                    rec.pair_id +
                                    "; use smaller instances");
    }
    nll -= std::log(mix);
  }
  return nll;
}

// ---------------------------------------------------------------------------

struct FlipCorrection {
  JudgePanel panel;
  bool flipped = false;
};

// Chooses between the raw and label-flipped reading of a learned panel
// ((alpha, beta) -> (1 - beta, 1 - alpha)), whichever is closer to the truth
// in mean |d alpha| + |d beta|.
inline FlipCorrection FlipCorrect(const JudgePanel& learned,
                                  const JudgePanel& truth,
                                  const std::string& head) {
  const auto learned_vals = ReliabilityValues(learned, head);
  const auto& true_logits = truth.Head(head);
  double raw_err = 0.0, flip_err = 0.0;
  for (std::size_t j = 0; j < learned.judges.size(); ++j) {
    const auto t = truth.IndexOf(learned.judges[j]);
    if (t < 0) {
      Fail(ErrorKind::kInvalidArgument,
           "judge " + learned.judges[j] + " missing from true panel");
    }
    const double ta = Logistic(true_logits.alpha_logit[t]);
    const double tb = Logistic(true_logits.beta_logit[t]);
    const auto& l = learned_vals[j];
    raw_err += std::abs(l.alpha - ta) + std::abs(l.beta - tb);
    flip_err += std::abs((1.0 - l.beta) - ta) + std::abs((1.0 - l.alpha) - tb);
  }
  FlipCorrection out{learned, flip_err < raw_err};
  if (out.flipped) {
    auto& logits = out.panel.heads.at(head);
    std::swap(logits.alpha_logit, logits.beta_logit);
    for (double& x : logits.alpha_logit) x = -x;
    for (double& x : logits.beta_logit) x = -x;
  }
  return out;
}

}  // namespace dialeval

#endif  // DIALEVAL_SYNTHLAB_HPP_
