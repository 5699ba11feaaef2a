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

// Run configuration: built-in defaults, overlaid by a JSON config file, then
// by dotted-path CLI overrides (--train.epochs 5). Unknown keys and type
// mismatches are rejected before any work starts.

#ifndef DIALEVAL_RUN_CONFIG_HPP_
#define DIALEVAL_RUN_CONFIG_HPP_

#include <filesystem>
#include <set>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/digest.hpp"
#include "dialeval/embed_client.hpp"
#include "dialeval/metrics.hpp"
#include "dialeval/synthlab.hpp"
#include "dialeval/trainer.hpp"
#include "json.hpp"

namespace dialeval {

inline nlohmann::json DefaultRunConfig() {
  using nlohmann::json;
  const TrainConfig t;
  const EmbedEndpointConfig e;
  const SynthSpec s;
  const LabelRatios ratios;
  return json{
      {"seed", 0},
      {"out", ""},
      {"quiet", false},
      {"heads", json::array({std::string(kOverallHead)})},
      {"train",
       {{"lr_model", t.lr_model},
        {"lr_reliability", t.lr_reliability},
        {"adam_beta1", t.adam_beta1},
        {"adam_beta2", t.adam_beta2},
        {"adam_epsilon", t.adam_epsilon},
        {"weight_decay", t.weight_decay},
        {"warmup_fraction", t.warmup_fraction},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"init_reliability", t.init_reliability},
        {"hidden_dims", t.hidden_dims},
        {"sigma", t.sigma}}},
      {"synth",
       {{"n_items", s.n_items},
        {"n_holdout_items", s.n_holdout_items},
        {"n_pairs", s.n_pairs},
        {"n_holdout_pairs", s.n_holdout_pairs},
        {"dim", s.dim},
        {"judges", json::array()},
        {"quality_map", s.quality_map},
        {"sigma_true", s.sigma_true},
        {"emit_swaps", s.emit_swaps},
        {"swap_inconsistency_rate", s.swap_inconsistency_rate},
        {"emit_dialogues", s.emit_dialogues}}},
      {"embed",
       {{"base_url", e.base_url},
        {"model_name", e.model_name},
        {"api_key_env", e.api_key_env},
        {"timeout_ms", e.timeout_ms},
        {"max_retries", e.max_retries},
        {"max_in_flight", e.max_in_flight},
        {"batch_size", e.batch_size},
        {"cache_dir", e.cache_dir},
        {"backoff_base_ms", e.backoff_base_ms},
        {"backoff_factor", e.backoff_factor}}},
      {"prepare",
       {{"balance", true},
        {"balance_head", std::string(kOverallHead)},
        {"ratios", {ratios.a, ratios.b, ratios.fair}},
        {"max_words", kDefaultMaxWordGap}}},
      {"eval",
       {{"protocol", "pairwise"},
        {"head", std::string(kOverallHead)},
        {"tie_threshold", kDefaultTieThreshold},
        {"tie_mode", "normalized"}}},
      {"paths",
       {{"labels", ""},
        {"swaps", ""},
        {"dialogues", ""},
        {"store", ""},
        {"model", ""},
        {"gold", ""},
        {"items", ""},
        {"pairs", ""},
        {"trace", ""}}},
  };
}

namespace internal {

inline bool SameJsonKind(const nlohmann::json& want, const nlohmann::json& got) {
  if (want.is_number()) {
    if (!got.is_number()) return false;
    // Integers stay integers; floats accept either.
    return want.is_number_float() || got.is_number_integer();
  }
  return want.type() == got.type();
}

// Overlays `patch` onto `base`, rejecting keys absent from `base`. Arrays and
// leaves replace wholesale.
inline void MergeChecked(nlohmann::json& base, const nlohmann::json& patch,
                         const std::string& prefix) {
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) {
      Fail(ErrorKind::kInvalidArgument, "unknown config key " + path);
    }
    auto& slot = base[key];
    if (slot.is_object()) {
      if (!value.is_object()) {
        Fail(ErrorKind::kInvalidArgument, "config key " + path +
                                              " must be an object");
      }
      MergeChecked(slot, value, path);
    } else {
      if (!SameJsonKind(slot, value)) {
        Fail(ErrorKind::kInvalidArgument,
             "config key " + path + " has the wrong type (expected " +
                 std::string(slot.type_name()) + ")");
      }
      slot = value;
    }
  }
}

}  // namespace internal

// Resolves defaults <- file <- overrides. Override values parse as JSON when
// they can, otherwise as plain strings.
inline nlohmann::json ResolveRunConfig(
    const std::string& config_path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  nlohmann::json cfg = DefaultRunConfig();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) Fail(ErrorKind::kInvalidArgument, "cannot open config " + config_path);
    auto file = nlohmann::json::parse(in, nullptr, false);
    if (file.is_discarded() || !file.is_object()) {
      Fail(ErrorKind::kInvalidArgument, "config " + config_path +
                                            " is not a JSON object");
    }
    internal::MergeChecked(cfg, file, "");
  }
  for (const auto& [dotted, raw] : overrides) {
    auto value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    // A string default takes the raw text even if it looks like JSON.
    nlohmann::json patch = value;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const auto dot = dotted.find('.', start);
      parts.push_back(dotted.substr(start, dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    const nlohmann::json* probe = &cfg;
    for (const auto& p : parts) {
      if (!probe->is_object() || !probe->contains(p)) {
        Fail(ErrorKind::kInvalidArgument, "unknown config key " + dotted);
      }
      probe = &(*probe)[p];
    }
    if (probe->is_string() && !patch.is_string()) patch = raw;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      patch = nlohmann::json{{*it, patch}};
    }
    internal::MergeChecked(cfg, patch, "");
  }
  return cfg;
}

inline std::string ConfigDigest(const nlohmann::json& cfg) {
  return Sha256Hex(cfg.dump());
}

inline std::vector<std::string> HeadsFrom(const nlohmann::json& cfg) {
  return cfg.at("heads").get<std::vector<std::string>>();
}

inline TrainConfig TrainConfigFrom(const nlohmann::json& cfg) {
  const auto& t = cfg.at("train");
  TrainConfig c;
  c.lr_model = t.at("lr_model").get<double>();
  c.lr_reliability = t.at("lr_reliability").get<double>();
  c.adam_beta1 = t.at("adam_beta1").get<double>();
  c.adam_beta2 = t.at("adam_beta2").get<double>();
  c.adam_epsilon = t.at("adam_epsilon").get<double>();
  c.weight_decay = t.at("weight_decay").get<double>();
  c.warmup_fraction = t.at("warmup_fraction").get<double>();
  c.epochs = t.at("epochs").get<int>();
  c.batch_size = t.at("batch_size").get<int>();
  c.init_reliability = t.at("init_reliability").get<double>();
  c.hidden_dims = t.at("hidden_dims").get<std::vector<std::size_t>>();
  c.sigma = t.at("sigma").get<double>();
  c.seed = DeriveSeed(cfg.at("seed").get<std::uint64_t>(), "train");
  c.head_selection = HeadsFrom(cfg);
  ValidateTrainConfig(c);
  return c;
}

inline SynthSpec SynthSpecFrom(const nlohmann::json& cfg) {
  const auto& s = cfg.at("synth");
  SynthSpec spec;
  spec.n_items = s.at("n_items").get<std::size_t>();
  spec.n_holdout_items = s.at("n_holdout_items").get<std::size_t>();
  spec.n_pairs = s.at("n_pairs").get<std::size_t>();
  spec.n_holdout_pairs = s.at("n_holdout_pairs").get<std::size_t>();
  spec.dim = s.at("dim").get<std::size_t>();
  spec.quality_map = s.at("quality_map").get<std::string>();
  spec.sigma_true = s.at("sigma_true").get<double>();
  spec.emit_swaps = s.at("emit_swaps").get<bool>();
  spec.swap_inconsistency_rate = s.at("swap_inconsistency_rate").get<double>();
  spec.emit_dialogues = s.at("emit_dialogues").get<bool>();
  spec.seed = DeriveSeed(cfg.at("seed").get<std::uint64_t>(), "synth");
  spec.heads = HeadsFrom(cfg);
  std::size_t k = 0;
  for (const auto& j : s.at("judges")) {
    static const std::set<std::string> kKeys{"name", "alpha", "beta",
                                             "fair_rate"};
    for (const auto& [key, v] : j.items()) {
      if (!kKeys.count(key)) {
        Fail(ErrorKind::kInvalidArgument, "unknown config key synth.judges." + key);
      }
    }
    SynthJudge judge;
    judge.name = j.value("name", "judge_" + std::to_string(k));
    judge.alpha = j.at("alpha").get<double>();
    judge.beta = j.at("beta").get<double>();
    judge.fair_rate = j.value("fair_rate", 0.0);
    spec.judges.push_back(judge);
    ++k;
  }
  ValidateSynthSpec(spec);
  return spec;
}

inline EmbedEndpointConfig EndpointConfigFrom(const nlohmann::json& cfg) {
  const auto& e = cfg.at("embed");
  EmbedEndpointConfig c;
  c.base_url = e.at("base_url").get<std::string>();
  c.model_name = e.at("model_name").get<std::string>();
  c.api_key_env = e.at("api_key_env").get<std::string>();
  c.timeout_ms = e.at("timeout_ms").get<int>();
  c.max_retries = e.at("max_retries").get<int>();
  c.max_in_flight = e.at("max_in_flight").get<int>();
  c.batch_size = e.at("batch_size").get<int>();
  c.cache_dir = e.at("cache_dir").get<std::string>();
  c.backoff_base_ms = e.at("backoff_base_ms").get<int>();
  c.backoff_factor = e.at("backoff_factor").get<double>();
  ValidateEndpointConfig(c);
  return c;
}

}  // namespace dialeval

#endif  // DIALEVAL_RUN_CONFIG_HPP_
