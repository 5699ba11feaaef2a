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

// Domain types for evaluable items, judge labels and the quality model, and
// the Thurstone Case V preference probability.

#ifndef DIALEVAL_CORE_HPP_
#define DIALEVAL_CORE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dialeval/error.hpp"
#include "dialeval/seeding.hpp"

namespace dialeval {

// ---------------------------------------------------------------------------
// Labels and heads

// WinA encodes r = 0, WinB encodes r = 1, Fair encodes r = -1.
enum class JudgeLabel : std::uint8_t { kWinA, kWinB, kFair };

constexpr JudgeLabel Mirror(JudgeLabel label) {
  switch (label) {
    case JudgeLabel::kWinA: return JudgeLabel::kWinB;
    case JudgeLabel::kWinB: return JudgeLabel::kWinA;
    case JudgeLabel::kFair: return JudgeLabel::kFair;
  }
  return JudgeLabel::kFair;
}

constexpr std::string_view ToString(JudgeLabel label) {
  switch (label) {
    case JudgeLabel::kWinA: return "A";
    case JudgeLabel::kWinB: return "B";
    case JudgeLabel::kFair: return "Fair";
  }
  return "Fair";
}

inline bool TryParseLabel(std::string_view text, JudgeLabel* out) {
  if (text == "A") { *out = JudgeLabel::kWinA; return true; }
  if (text == "B") { *out = JudgeLabel::kWinB; return true; }
  if (text == "Fair") { *out = JudgeLabel::kFair; return true; }
  return false;
}

inline JudgeLabel ParseLabel(std::string_view text) {
  JudgeLabel label;
  if (!TryParseLabel(text, &label)) {
    Fail(ErrorKind::kInvalidArgument,
         "illegal label \"" + std::string(text) + "\" (want A, B or Fair)");
  }
  return label;
}

inline constexpr std::string_view kOverallHead = "Overall";

inline constexpr std::array<std::string_view, 10> kDimensionHeads = {
    "Accuracy",      "Logicality",  "Conversationality", "Relevance",
    "Personalization", "Creativity", "Interactivity",    "Emotionality",
    "Informativeness", "Safety"};

// Annotation order: the ten dimensions, then Overall.
inline constexpr std::array<std::string_view, 11> kAllHeads = {
    "Accuracy",      "Logicality",  "Conversationality", "Relevance",
    "Personalization", "Creativity", "Interactivity",    "Emotionality",
    "Informativeness", "Safety",     "Overall"};

inline bool IsKnownHead(std::string_view name) {
  return std::find(kAllHeads.begin(), kAllHeads.end(), name) != kAllHeads.end();
}

// ---------------------------------------------------------------------------
// Items and preference records

struct EmbeddedItem {
  std::string id;
  std::vector<double> embedding;
};

inline void ValidateItem(const EmbeddedItem& item, std::size_t dim) {
  if (dim == 0) Fail(ErrorKind::kInvalidArgument, "embedding dim must be > 0");
  if (item.embedding.size() != dim) {
    throw DimensionError(dim, item.embedding.size(), "item " + item.id);
  }
  for (double v : item.embedding) {
    if (!std::isfinite(v)) {
      Fail(ErrorKind::kInvalidArgument,
           "item " + item.id + " has a non-finite embedding coordinate");
    }
  }
}

// judge id -> head name -> label
using HeadLabels = std::map<std::string, JudgeLabel>;
using JudgeLabels = std::map<std::string, HeadLabels>;

struct PreferenceRecord {
  std::string pair_id;
  std::string item_a;
  std::string item_b;
  JudgeLabels labels;

  // Number of judges with a non-Fair label for `head` (M' in the model).
  std::size_t NonFairCount(std::string_view head) const {
    std::size_t n = 0;
    for (const auto& [judge, heads] : labels) {
      auto it = heads.find(std::string(head));
      if (it != heads.end() && it->second != JudgeLabel::kFair) ++n;
    }
    return n;
  }

  bool HasHead(std::string_view head) const {
    for (const auto& [judge, heads] : labels) {
      if (heads.count(std::string(head))) return true;
    }
    return false;
  }
};

inline void ValidateRecord(const PreferenceRecord& record) {
  if (record.item_a == record.item_b) {
    Fail(ErrorKind::kInvalidArgument,
         "record " + record.pair_id + ": item_a equals item_b");
  }
  for (const auto& [judge, heads] : record.labels) {
    if (!heads.count(std::string(kOverallHead))) {
      Fail(ErrorKind::kInvalidArgument, "record " + record.pair_id +
                                            ": judge " + judge +
                                            " has no Overall label");
    }
    for (const auto& [head, label] : heads) {
      if (!IsKnownHead(head)) {
        Fail(ErrorKind::kInvalidArgument,
             "record " + record.pair_id + ": unknown head " + head);
      }
    }
  }
}

// Id -> dense f64 embedding lookup used by all scoring paths.
class ItemTable {
 public:
  ItemTable() = default;
  explicit ItemTable(std::size_t dim) : dim_(dim) {}

  static ItemTable FromItems(std::span<const EmbeddedItem> items,
                             std::size_t dim) {
    ItemTable table(dim);
    for (const auto& item : items) table.Add(item);
    return table;
  }

  void Add(const EmbeddedItem& item) {
    ValidateItem(item, dim_);
    Add(item.id, item.embedding);
  }

  void Add(const std::string& id, std::span<const double> embedding) {
    if (embedding.size() != dim_) {
      throw DimensionError(dim_, embedding.size(), "item " + id);
    }
    if (!index_.emplace(id, ids_.size()).second) {
      Fail(ErrorKind::kInvalidArgument, "duplicate item id " + id);
    }
    ids_.push_back(id);
    data_.insert(data_.end(), embedding.begin(), embedding.end());
  }

  bool Contains(const std::string& id) const { return index_.count(id) > 0; }

  std::span<const double> Get(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
      Fail(ErrorKind::kInvalidArgument, "unknown item id " + id);
    }
    return {data_.data() + it->second * dim_, dim_};
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Quality head: a tanh MLP with a scalar identity output.

// y = W x + b with W stored row-major as rows (outputs) x cols (inputs).
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  static DenseLayer Zeros(std::size_t rows, std::size_t cols) {
    return {rows, cols, std::vector<double>(rows * cols, 0.0),
            std::vector<double>(rows, 0.0)};
  }
  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
};

struct QualityHead {
  std::vector<DenseLayer> layers;
  double sigma = 1.0;  // fixed noise scale, never trained

  std::size_t input_dim() const { return layers.empty() ? 0 : layers[0].cols; }

  std::vector<std::size_t> LayerDims() const {
    std::vector<std::size_t> dims;
    if (layers.empty()) return dims;
    dims.push_back(layers[0].cols);
    for (const auto& layer : layers) dims.push_back(layer.rows);
    return dims;
  }

  static QualityHead Zeros(std::span<const std::size_t> dims,
                           double sigma = 1.0) {
    QualityHead head;
    head.sigma = sigma;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      head.layers.push_back(DenseLayer::Zeros(dims[i + 1], dims[i]));
    }
    return head;
  }

  // Glorot-uniform weights, zero biases.
  static QualityHead Glorot(std::span<const std::size_t> dims, Rng& rng,
                            double sigma = 1.0) {
    QualityHead head = Zeros(dims, sigma);
    for (auto& layer : head.layers) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(layer.rows + layer.cols));
      for (double& w : layer.weights) w = (2.0 * Uniform01(rng) - 1.0) * limit;
    }
    return head;
  }
};

inline void ValidateHead(const QualityHead& head) {
  if (head.layers.empty()) {
    Fail(ErrorKind::kInvalidArgument, "quality head has no layers");
  }
  if (!(head.sigma > 0.0) || !std::isfinite(head.sigma)) {
    Fail(ErrorKind::kInvalidArgument, "quality head sigma must be positive");
  }
  for (std::size_t i = 0; i < head.layers.size(); ++i) {
    const auto& layer = head.layers[i];
    if (layer.rows == 0 || layer.cols == 0 ||
        layer.weights.size() != layer.rows * layer.cols ||
        layer.biases.size() != layer.rows) {
      Fail(ErrorKind::kInvalidArgument,
           "layer " + std::to_string(i) + " has inconsistent shape");
    }
    if (i > 0 && head.layers[i - 1].rows != layer.cols) {
      throw DimensionError(head.layers[i - 1].rows, layer.cols,
                           "layer " + std::to_string(i) + " input");
    }
    for (double v : layer.weights) {
      if (!std::isfinite(v)) {
        Fail(ErrorKind::kInvalidArgument, "non-finite head weight");
      }
    }
    for (double v : layer.biases) {
      if (!std::isfinite(v)) {
        Fail(ErrorKind::kInvalidArgument, "non-finite head bias");
      }
    }
  }
  if (head.layers.back().rows != 1) {
    throw DimensionError(1, head.layers.back().rows, "head output");
  }
}

// Forward pass keeping every layer's output; activations[0] is the input.
// Used by backprop; QualityScore is the allocation-light path.
inline std::vector<std::vector<double>> ForwardActivations(
    const QualityHead& head, std::span<const double> x) {
  if (x.size() != head.input_dim()) {
    throw DimensionError(head.input_dim(), x.size(), "quality head input");
  }
  std::vector<std::vector<double>> acts;
  acts.reserve(head.layers.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < head.layers.size(); ++l) {
    const auto& layer = head.layers[l];
    const auto& in = acts.back();
    std::vector<double> out(layer.rows);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double* w = layer.weights.data() + r * layer.cols;
      double s = 0.0;
      for (std::size_t c = 0; c < layer.cols; ++c) s += w[c] * in[c];
      s += layer.biases[r];
      out[r] = (l + 1 < head.layers.size()) ? std::tanh(s) : s;
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

inline double QualityScore(const QualityHead& head,
                           std::span<const double> embedding) {
  return ForwardActivations(head, embedding).back()[0];
}

inline double QualityScore(const QualityHead& head, const EmbeddedItem& item) {
  return QualityScore(head, item.embedding);
}

// ---------------------------------------------------------------------------
// Thurstone Case V

inline constexpr double kProbabilityFloor = 1e-12;

inline double NormalCdf(double z) {
  if (!std::isfinite(z)) {
    Fail(ErrorKind::kNumeric, "NormalCdf: non-finite argument");
  }
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double NormalPdf(double z) {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double ClampProbability(double p) {
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

// z = (f(B) - f(A)) / (sqrt(2) sigma); P(r = 1) = Phi(z).
inline double PreferenceZ(double score_a, double score_b, double sigma) {
  return (score_b - score_a) / (std::numbers::sqrt2 * sigma);
}

// Probability that B is preferred over A, clamped away from 0 and 1.
inline double PreferenceProbability(const QualityHead& head,
                                    std::span<const double> a,
                                    std::span<const double> b) {
  const double z =
      PreferenceZ(QualityScore(head, a), QualityScore(head, b), head.sigma);
  return ClampProbability(NormalCdf(z));
}

inline double PreferenceProbability(const QualityHead& head,
                                    const EmbeddedItem& a,
                                    const EmbeddedItem& b) {
  return PreferenceProbability(head, a.embedding, b.embedding);
}

// ---------------------------------------------------------------------------
// Judge reliabilities

inline double Logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double Logit(double p) { return std::log(p) - std::log1p(-p); }

// log(logistic(x)) without overflow.
inline double LogSigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

struct ReliabilityLogits {
  std::vector<double> alpha_logit;
  std::vector<double> beta_logit;
};

struct JudgePanel {
  std::vector<std::string> judges;
  std::map<std::string, ReliabilityLogits> heads;

  static JudgePanel Uniform(std::vector<std::string> judges,
                            std::span<const std::string> head_names,
                            double init_reliability = 0.5) {
    JudgePanel panel;
    const double logit = Logit(init_reliability);
    for (const auto& h : head_names) {
      panel.heads[h] = {std::vector<double>(judges.size(), logit),
                        std::vector<double>(judges.size(), logit)};
    }
    panel.judges = std::move(judges);
    return panel;
  }

  const ReliabilityLogits& Head(const std::string& name) const {
    auto it = heads.find(name);
    if (it == heads.end()) {
      Fail(ErrorKind::kInvalidArgument, "panel has no head " + name);
    }
    return it->second;
  }

  std::ptrdiff_t IndexOf(std::string_view judge) const {
    auto it = std::find(judges.begin(), judges.end(), judge);
    return it == judges.end() ? -1 : it - judges.begin();
  }
};

struct Reliability {
  double alpha;
  double beta;
};

// Per-judge (alpha, beta) for one head, in panel judge order.
inline std::vector<Reliability> ReliabilityValues(const JudgePanel& panel,
                                                  const std::string& head) {
  const auto& logits = panel.Head(head);
  std::vector<Reliability> out;
  for (std::size_t j = 0; j < panel.judges.size(); ++j) {
    out.push_back({Logistic(logits.alpha_logit[j]),
                   Logistic(logits.beta_logit[j])});
  }
  return out;
}

// ---------------------------------------------------------------------------
// The full evaluator

struct ModelMetadata {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string created_at;
};

struct EvaluatorModel {
  std::size_t embedding_dim = 0;
  std::map<std::string, QualityHead> heads;
  JudgePanel panel;
  ModelMetadata metadata;  // in-memory only; not part of the model file

  const QualityHead& Head(const std::string& name) const {
    auto it = heads.find(name);
    if (it == heads.end()) {
      Fail(ErrorKind::kInvalidArgument, "model has no head " + name);
    }
    return it->second;
  }
};

inline void ValidateModel(const EvaluatorModel& model) {
  if (model.embedding_dim == 0) {
    Fail(ErrorKind::kInvalidArgument, "model embedding dim must be > 0");
  }
  if (!model.heads.count(std::string(kOverallHead))) {
    Fail(ErrorKind::kInvalidArgument, "model has no Overall head");
  }
  for (const auto& [name, head] : model.heads) {
    if (!IsKnownHead(name)) {
      Fail(ErrorKind::kInvalidArgument, "unknown head name " + name);
    }
    ValidateHead(head);
    if (head.input_dim() != model.embedding_dim) {
      throw DimensionError(model.embedding_dim, head.input_dim(),
                           "head " + name);
    }
    auto it = model.panel.heads.find(name);
    if (it == model.panel.heads.end() ||
        it->second.alpha_logit.size() != model.panel.judges.size() ||
        it->second.beta_logit.size() != model.panel.judges.size()) {
      Fail(ErrorKind::kInvalidArgument,
           "panel reliabilities missing or misshaped for head " + name);
    }
  }
}

}  // namespace dialeval

#endif  // DIALEVAL_CORE_HPP_
