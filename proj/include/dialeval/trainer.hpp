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

// Joint maximum-likelihood training of quality heads and judge reliabilities
// with AdamW and a linear-warmup + cosine learning-rate schedule.

#ifndef DIALEVAL_TRAINER_HPP_
#define DIALEVAL_TRAINER_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dialeval/core.hpp"
#include "dialeval/digest.hpp"
#include "dialeval/likelihood.hpp"
#include "json.hpp"

namespace dialeval {

struct TrainConfig {
  double lr_model = 5e-5;
  double lr_reliability = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.95;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.1;  // head parameters only
  double warmup_fraction = 0.10;
  int epochs = 3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double init_reliability = 0.5;
  std::vector<std::string> head_selection{std::string(kOverallHead)};
  std::vector<std::size_t> hidden_dims{256, 64};
  double sigma = 1.0;
};

inline void ValidateTrainConfig(const TrainConfig& c) {
  auto bad = [](const std::string& what) {
    Fail(ErrorKind::kInvalidArgument, "train config: " + what);
  };
  if (!(c.lr_model > 0) || !(c.lr_reliability > 0)) {
    bad("learning rates must be positive");
  }
  if (!(c.weight_decay >= 0)) bad("weight_decay must be >= 0");
  if (!(c.adam_beta1 > 0 && c.adam_beta1 < 1) ||
      !(c.adam_beta2 > 0 && c.adam_beta2 < 1)) {
    bad("adam betas must lie in (0, 1)");
  }
  if (!(c.adam_epsilon > 0)) bad("adam_epsilon must be positive");
  if (!(c.warmup_fraction >= 0 && c.warmup_fraction < 1)) {
    bad("warmup_fraction must lie in [0, 1)");
  }
  if (c.epochs <= 0) bad("epochs must be positive");
  if (c.batch_size <= 0) bad("batch_size must be positive");
  if (!(c.init_reliability > 0 && c.init_reliability < 1)) {
    bad("init_reliability must lie in (0, 1)");
  }
  if (!(c.sigma > 0) || !std::isfinite(c.sigma)) bad("sigma must be positive");
  if (c.head_selection.empty()) bad("head_selection is empty");
  std::set<std::string> seen;
  for (const auto& h : c.head_selection) {
    if (!IsKnownHead(h)) bad("unknown head " + h);
    if (!seen.insert(h).second) bad("duplicate head " + h);
  }
  if (!seen.count(std::string(kOverallHead))) {
    bad("head_selection must include Overall");
  }
  for (auto d : c.hidden_dims) {
    if (d == 0) bad("hidden layer widths must be positive");
  }
}

// Linear warmup over the first floor(warmup_fraction * total) steps, then
// lr(t) = peak * 0.5 * (1 + cos(pi * progress)) decaying to zero.
class WarmupCosineSchedule {
 public:
  WarmupCosineSchedule(std::size_t total_steps, double warmup_fraction)
      : total_(total_steps),
        warmup_(static_cast<std::size_t>(
            std::floor(warmup_fraction * static_cast<double>(total_steps)))) {}

  double Multiplier(std::size_t step) const {
    if (step < warmup_) {
      return static_cast<double>(step + 1) / static_cast<double>(warmup_);
    }
    const double span = static_cast<double>(std::max<std::size_t>(
        1, total_ - warmup_));
    const double progress = static_cast<double>(step - warmup_) / span;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  }

  std::size_t total_steps() const { return total_; }
  std::size_t warmup_steps() const { return warmup_; }

 private:
  std::size_t total_;
  std::size_t warmup_;
};

// AdamW with bias correction and decoupled weight decay
// (p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + decay * p)).
class AdamW {
 public:
  AdamW(double beta1, double beta2, double epsilon)
      : beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  // Call once per optimizer step before updating the parameter groups.
  void BeginStep() { ++t_; }

  void Update(std::size_t slot, std::span<double> params,
              std::span<const double> grads, double lr, double decay) {
    if (slot >= m_.size()) {
      m_.resize(slot + 1);
      v_.resize(slot + 1);
    }
    auto& m = m_[slot];
    auto& v = v_[slot];
    if (m.size() != params.size()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * grads[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * grads[i] * grads[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      params[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps_) + decay * params[i]);
    }
  }

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct EpochStats {
  double mean_nll = 0.0;
  std::map<std::string, double> per_head;
};

struct TrainTrace {
  std::vector<EpochStats> epochs;
  std::map<std::string, std::vector<double>> learning_rates;  // lr_model
  std::map<std::string, std::vector<Reliability>> reliabilities;
  std::vector<std::string> judges;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  EvaluatorModel model;
  TrainTrace trace;
};

// Sorted union of judge ids over all records.
inline std::vector<std::string> CollectJudges(
    std::span<const PreferenceRecord> records) {
  std::set<std::string> judges;
  for (const auto& r : records) {
    for (const auto& [judge, heads] : r.labels) judges.insert(judge);
  }
  return {judges.begin(), judges.end()};
}

inline std::vector<std::size_t> HeadLayerDims(std::size_t input_dim,
                                              const TrainConfig& config) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(1);
  return dims;
}

// Fresh model: Glorot-initialised heads and every reliability at
// init_reliability.
inline EvaluatorModel InitialModel(std::size_t embedding_dim,
                                   std::vector<std::string> judges,
                                   const TrainConfig& config) {
  EvaluatorModel model;
  model.embedding_dim = embedding_dim;
  const auto dims = HeadLayerDims(embedding_dim, config);
  for (const auto& h : config.head_selection) {
    Rng rng = MakeRng(config.seed, "init/" + h);
    model.heads[h] = QualityHead::Glorot(dims, rng, config.sigma);
  }
  model.panel = JudgePanel::Uniform(std::move(judges), config.head_selection,
                                    config.init_reliability);
  model.metadata.seed = config.seed;
  return model;
}

namespace internal {

inline void TrainHead(std::span<const PreferenceRecord> all_records,
                      const ItemTable& items, const TrainConfig& config,
                      const std::string& head_name, EvaluatorModel& model,
                      TrainTrace& trace) {
  std::vector<const PreferenceRecord*> records;
  for (const auto& r : all_records) {
    if (r.HasHead(head_name)) records.push_back(&r);
  }
  if (records.empty()) {
    Fail(ErrorKind::kInvalidArgument,
         "no records carry labels for head " + head_name);
  }
  for (const auto* r : records) CheckRecord(*r, items, head_name);

  QualityHead& head = model.heads.at(head_name);
  ReliabilityLogits& logits = model.panel.heads.at(head_name);
  const std::size_t n = records.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  const WarmupCosineSchedule schedule(
      steps_per_epoch * static_cast<std::size_t>(config.epochs),
      config.warmup_fraction);

  AdamW opt(config.adam_beta1, config.adam_beta2, config.adam_epsilon);
  Rng shuffle_rng = MakeRng(config.seed, "shuffle/" + head_name);
  std::vector<std::size_t> order(n);
  auto& lr_log = trace.learning_rates[head_name];

  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_nll = 0.0;
    for (std::size_t start = 0; start < n; start += batch, ++step) {
      const std::size_t end = std::min(n, start + batch);
      const double mult = schedule.Multiplier(step);
      lr_log.push_back(config.lr_model * mult);

      auto grads = HeadGradients::ZerosLike(head, model.panel.judges.size());
      double batch_nll = 0.0;
      std::size_t contributing = 0;
      std::vector<std::string> bad_ids;
      for (std::size_t k = start; k < end; ++k) {
        const auto& rec = *records[order[k]];
        if (rec.NonFairCount(head_name) == 0) continue;
        ++contributing;
        double nll = 0.0;
        try {
          nll = RecordNll(rec, items, head, logits, model.panel, head_name,
                          &grads);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kNumeric) throw;
          Fail(ErrorKind::kNumeric, "non-finite loss at step " +
                                        std::to_string(step) + " (head " +
                                        head_name + ", records: " +
                                        rec.pair_id + "): " + e.what());
        }
        if (!std::isfinite(nll)) bad_ids.push_back(rec.pair_id);
        batch_nll += nll;
      }
      if (!bad_ids.empty() || !std::isfinite(batch_nll)) {
        std::string ids;
        for (const auto& id : bad_ids) ids += (ids.empty() ? "" : ",") + id;
        Fail(ErrorKind::kNumeric, "non-finite loss at step " +
                                      std::to_string(step) + " (head " +
                                      head_name + ", records: " + ids + ")");
      }
      epoch_nll += batch_nll;
      // A batch of pure abstentions carries no signal: no update at all.
      if (contributing == 0) continue;

      const double scale = 1.0 / static_cast<double>(contributing);
      auto scaled = [scale](std::vector<double>& g) {
        for (double& x : g) x *= scale;
      };
      opt.BeginStep();
      std::size_t slot = 0;
      for (std::size_t l = 0; l < head.layers.size(); ++l) {
        scaled(grads.layers[l].weights);
        scaled(grads.layers[l].biases);
        opt.Update(slot++, head.layers[l].weights, grads.layers[l].weights,
                   config.lr_model * mult, config.weight_decay);
        opt.Update(slot++, head.layers[l].biases, grads.layers[l].biases,
                   config.lr_model * mult, config.weight_decay);
      }
      scaled(grads.reliability.alpha_logit);
      scaled(grads.reliability.beta_logit);
      opt.Update(slot++, logits.alpha_logit, grads.reliability.alpha_logit,
                 config.lr_reliability * mult, 0.0);
      opt.Update(slot++, logits.beta_logit, grads.reliability.beta_logit,
                 config.lr_reliability * mult, 0.0);
    }
    auto& stats = trace.epochs[static_cast<std::size_t>(epoch)];
    stats.per_head[head_name] = epoch_nll / static_cast<double>(n);
  }
  trace.reliabilities[head_name] = ReliabilityValues(model.panel, head_name);
}

}  // namespace internal

// Trains every head in config.head_selection independently over the shared
// embeddings. Deterministic for a fixed (config, records, items).
inline TrainResult Train(std::span<const PreferenceRecord> records,
                         const ItemTable& items, const TrainConfig& config) {
  ValidateTrainConfig(config);
  if (records.empty()) {
    Fail(ErrorKind::kInvalidArgument, "training requires at least one record");
  }
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;
  result.model = InitialModel(items.dim(), CollectJudges(records), config);
  result.model.metadata.created_at = UtcTimestamp();
  auto& trace = result.trace;
  trace.seed = config.seed;
  trace.judges = result.model.panel.judges;
  trace.epochs.resize(static_cast<std::size_t>(config.epochs));
  for (const auto& head : config.head_selection) {
    internal::TrainHead(records, items, config, head, result.model, trace);
  }
  for (auto& stats : trace.epochs) {
    double sum = 0.0;
    for (const auto& [h, v] : stats.per_head) sum += v;
    stats.mean_nll = sum / static_cast<double>(stats.per_head.size());
  }
  trace.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return result;
}

// Mean of (alpha + beta) / 2 across judges. Below 0.5 the head most likely
// converged to the label-flipped mode.
inline double MeanReliability(std::span<const Reliability> values) {
  if (values.empty()) return 0.5;
  double s = 0.0;
  for (const auto& r : values) s += 0.5 * (r.alpha + r.beta);
  return s / static_cast<double>(values.size());
}

inline Reliability FlippedReliability(const Reliability& r) {
  return {1.0 - r.beta, 1.0 - r.alpha};
}

inline nlohmann::json TraceToJson(const TrainTrace& trace) {
  using nlohmann::json;
  json j;
  j["epochs"] = json::array();
  for (const auto& e : trace.epochs) {
    json per_head = json::object();
    for (const auto& [h, v] : e.per_head) per_head[h] = v;
    j["epochs"].push_back({{"mean_nll", e.mean_nll}, {"per_head", per_head}});
  }
  json rel = json::object();
  json flipped = json::object();
  for (const auto& [head, values] : trace.reliabilities) {
    json per_judge = json::object();
    json per_judge_flipped = json::object();
    for (std::size_t k = 0; k < values.size(); ++k) {
      per_judge[trace.judges[k]] = {{"alpha", values[k].alpha},
                                    {"beta", values[k].beta}};
      const auto f = FlippedReliability(values[k]);
      per_judge_flipped[trace.judges[k]] = {{"alpha", f.alpha},
                                            {"beta", f.beta}};
    }
    rel[head] = per_judge;
    if (MeanReliability(values) < 0.5) flipped[head] = per_judge_flipped;
  }
  j["reliabilities"] = rel;
  if (!flipped.empty()) j["flipped_view"] = flipped;
  json lrs = json::object();
  for (const auto& [h, v] : trace.learning_rates) lrs[h] = v;
  j["learning_rates"] = lrs;
  j["seed"] = trace.seed;
  j["wall_seconds"] = trace.wall_seconds;
  return j;
}

}  // namespace dialeval

#endif  // DIALEVAL_TRAINER_HPP_
