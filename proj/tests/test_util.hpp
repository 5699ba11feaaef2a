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

// Random fixtures shared by the unit and acceptance tests.

#ifndef DIALEVAL_TESTS_TEST_UTIL_HPP_
#define DIALEVAL_TESTS_TEST_UTIL_HPP_

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dialeval/core.hpp"
#include "dialeval/seeding.hpp"

namespace dialeval::testing {

inline std::vector<std::string> JudgeNames(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < n; ++j) out.push_back("j" + std::to_string(j));
  return out;
}

inline std::vector<EmbeddedItem> RandomItems(std::size_t n, std::size_t dim,
                                             Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<EmbeddedItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    EmbeddedItem item{"it" + std::to_string(i), std::vector<double>(dim)};
    for (double& v : item.embedding) v = normal(rng);
    items.push_back(std::move(item));
  }
  return items;
}

// Random labels for every judge on `heads`; roughly a third are Fair.
inline std::vector<PreferenceRecord> RandomRecords(
    std::size_t n, const std::vector<EmbeddedItem>& items,
    const std::vector<std::string>& judges,
    const std::vector<std::string>& heads, Rng& rng, double fair_rate = 0.3) {
  std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
  std::vector<PreferenceRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    PreferenceRecord r;
    r.pair_id = "p" + std::to_string(i);
    const auto a = pick(rng);
    auto b = pick(rng);
    while (b == a) b = pick(rng);
    r.item_a = items[a].id;
    r.item_b = items[b].id;
    for (const auto& j : judges) {
      for (const auto& h : heads) {
        const double u = Uniform01(rng);
        r.labels[j][h] = u < fair_rate                    ? JudgeLabel::kFair
                         : u < fair_rate + (1 - fair_rate) / 2 ? JudgeLabel::kWinA
                                                          : JudgeLabel::kWinB;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Glorot head with non-zero biases plus a panel with random logits.
inline EvaluatorModel RandomModel(std::size_t dim,
                                  const std::vector<std::size_t>& hidden,
                                  const std::vector<std::string>& judges,
                                  const std::vector<std::string>& heads,
                                  Rng& rng) {
  EvaluatorModel model;
  model.embedding_dim = dim;
  std::vector<std::size_t> dims{dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& h : heads) {
    auto head = QualityHead::Glorot(dims, rng, 0.5 + Uniform01(rng));
    for (auto& layer : head.layers) {
      for (double& b : layer.biases) b = 0.3 * normal(rng);
    }
    model.heads[h] = std::move(head);
  }
  model.panel = JudgePanel::Uniform(judges, heads, 0.5);
  for (auto& [h, logits] : model.panel.heads) {
    for (double& x : logits.alpha_logit) x = normal(rng);
    for (double& x : logits.beta_logit) x = normal(rng);
  }
  return model;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("dialeval_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dialeval::testing

#endif  // DIALEVAL_TESTS_TEST_UTIL_HPP_
