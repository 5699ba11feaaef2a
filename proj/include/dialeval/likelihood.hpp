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

// Multi-judge likelihood under the hit-rate / correct-rejection noise model,
// and its analytic gradient with respect to the quality head and the
// per-judge reliability logits.
//
// For one pair and one head, with y_j in {0 (A), 1 (B)} over non-Fair judges:
//   log A = sum_j y_j log(alpha_j) + (1 - y_j) log(1 - alpha_j)
//   log B = sum_j (1 - y_j) log(beta_j) + y_j log(1 - beta_j)
//   L     = log(A P + B (1 - P)),   P = Phi((f(B) - f(A)) / (sqrt2 sigma))
// and the batch loss is -sum L.

#ifndef DIALEVAL_LIKELIHOOD_HPP_
#define DIALEVAL_LIKELIHOOD_HPP_

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dialeval/core.hpp"

namespace dialeval {

// Labels of one record for `head`, aligned to panel.judges. Judges that gave
// no label for the head count as Fair.
inline std::vector<JudgeLabel> AlignedLabels(const PreferenceRecord& record,
                                             const JudgePanel& panel,
                                             const std::string& head) {
  std::vector<JudgeLabel> out(panel.judges.size(), JudgeLabel::kFair);
  for (const auto& [judge, heads] : record.labels) {
    const auto j = panel.IndexOf(judge);
    if (j < 0) {
      Fail(ErrorKind::kInvalidArgument,
           "record " + record.pair_id + ": judge " + judge + " not in panel");
    }
    auto it = heads.find(head);
    if (it != heads.end()) out[static_cast<std::size_t>(j)] = it->second;
  }
  return out;
}

namespace internal {

struct LogEvidence {
  double log_a = 0.0;  // log of the product given r = 1
  double log_b = 0.0;  // log of the product given r = 0
  std::size_t voters = 0;
};

inline LogEvidence JudgeEvidence(std::span<const JudgeLabel> labels,
                                 const ReliabilityLogits& logits) {
  LogEvidence ev;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const double a = logits.alpha_logit[j];
    const double b = logits.beta_logit[j];
    switch (labels[j]) {
      case JudgeLabel::kWinB:  // y = 1
        ev.log_a += LogSigmoid(a);
        ev.log_b += LogSigmoid(-b);
        ++ev.voters;
        break;
      case JudgeLabel::kWinA:  // y = 0
        ev.log_a += LogSigmoid(-a);
        ev.log_b += LogSigmoid(b);
        ++ev.voters;
        break;
      case JudgeLabel::kFair:
        break;
    }
  }
  return ev;
}

inline double LogAddExp(double u, double v) {
  const double hi = std::max(u, v);
  const double lo = std::min(u, v);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace internal

// log[A P + B (1 - P)] for one head. `p` must already be clamped.
// Returns exactly 0 when every judge is Fair.
inline double PairLogLikelihood(std::span<const JudgeLabel> labels,
                                const ReliabilityLogits& logits, double p) {
  if (labels.size() != logits.alpha_logit.size()) {
    throw DimensionError(logits.alpha_logit.size(), labels.size(),
                         "labels vs panel judges");
  }
  const auto ev = internal::JudgeEvidence(labels, logits);
  if (ev.voters == 0) return 0.0;
  return internal::LogAddExp(ev.log_a + std::log(p),
                             ev.log_b + std::log1p(-p));
}

inline double PairLogLikelihood(std::span<const JudgeLabel> labels,
                                const JudgePanel& panel,
                                const std::string& head, double p) {
  return PairLogLikelihood(labels, panel.Head(head), p);
}

// ---------------------------------------------------------------------------

struct HeadGradients {
  std::vector<DenseLayer> layers;  // d(loss)/d(weights), d(loss)/d(biases)
  ReliabilityLogits reliability;   // d(loss)/d(alpha_logit), d(beta_logit)

  static HeadGradients ZerosLike(const QualityHead& head,
                                 std::size_t judges) {
    HeadGradients g;
    for (const auto& layer : head.layers) {
      g.layers.push_back(DenseLayer::Zeros(layer.rows, layer.cols));
    }
    g.reliability.alpha_logit.assign(judges, 0.0);
    g.reliability.beta_logit.assign(judges, 0.0);
    return g;
  }
};

struct GradientBundle {
  std::map<std::string, HeadGradients> heads;
};

namespace internal {

// Adds upstream * d f(x) / d theta into `grads`, given the activations of
// the forward pass over x.
inline void BackpropScalar(const QualityHead& head,
                           const std::vector<std::vector<double>>& acts,
                           double upstream, std::vector<DenseLayer>& grads) {
  std::vector<double> delta{upstream};
  for (std::size_t l = head.layers.size(); l-- > 0;) {
    const auto& layer = head.layers[l];
    auto& g = grads[l];
    const auto& in = acts[l];
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      double* gw = g.weights.data() + r * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) gw[c] += d * in[c];
      g.biases[r] += d;
    }
    if (l == 0) break;
    // acts[l] = tanh(pre-activation of layer l - 1)
    std::vector<double> prev(layer.cols, 0.0);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* w = layer.weights.data() + r * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) prev[c] += w[c] * d;
    }
    for (std::size_t c = 0; c < layer.cols; ++c) {
      prev[c] *= 1.0 - in[c] * in[c];
    }
    delta = std::move(prev);
  }
}

inline const PreferenceRecord& CheckRecord(const PreferenceRecord& record,
                                           const ItemTable& items,
                                           const std::string& head) {
  if (!items.Contains(record.item_a)) {
    Fail(ErrorKind::kInvalidArgument, "record " + record.pair_id +
                                          ": unknown item " + record.item_a);
  }
  if (!items.Contains(record.item_b)) {
    Fail(ErrorKind::kInvalidArgument, "record " + record.pair_id +
                                          ": unknown item " + record.item_b);
  }
  if (!record.HasHead(head)) {
    Fail(ErrorKind::kInvalidArgument,
         "record " + record.pair_id + ": no label for head " + head);
  }
  return record;
}

// Negative log-likelihood of one record; accumulates its gradient into
// `grads` when non-null.
inline double RecordNll(const PreferenceRecord& record, const ItemTable& items,
                        const QualityHead& head,
                        const ReliabilityLogits& logits,
                        const JudgePanel& panel, const std::string& head_name,
                        HeadGradients* grads) {
  CheckRecord(record, items, head_name);
  const auto labels = AlignedLabels(record, panel, head_name);
  const auto ev = JudgeEvidence(labels, logits);
  if (ev.voters == 0) return 0.0;

  const auto acts_a = ForwardActivations(head, items.Get(record.item_a));
  const auto acts_b = ForwardActivations(head, items.Get(record.item_b));
  const double z =
      PreferenceZ(acts_a.back()[0], acts_b.back()[0], head.sigma);
  const double p_raw = NormalCdf(z);
  const double q_raw = NormalCdf(-z);
  const double p = ClampProbability(p_raw);
  const double q = ClampProbability(q_raw);

  const double u = ev.log_a + std::log(p);
  const double v = ev.log_b + std::log(q);
  const double lse = LogAddExp(u, v);
  if (!grads) return -lse;

  // Posterior responsibilities of r = 1 and r = 0.
  const double w1 = std::exp(u - lse);
  const double w0 = std::exp(v - lse);

  // dL/dz = (A - B) phi(z) / (A P + B Q); zero inside the clamped tails.
  double dl_dz = 0.0;
  if (p == p_raw && q == q_raw) {
    const double phi = NormalPdf(z);
    dl_dz = std::exp(ev.log_a - lse) * phi - std::exp(ev.log_b - lse) * phi;
  }
  if (dl_dz != 0.0) {
    const double dz_df = 1.0 / (std::numbers::sqrt2 * head.sigma);
    // loss = -L; f(B) enters with +dz_df, f(A) with -dz_df.
    BackpropScalar(head, acts_b, -dl_dz * dz_df, grads->layers);
    BackpropScalar(head, acts_a, dl_dz * dz_df, grads->layers);
  }

  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == JudgeLabel::kFair) continue;
    const double y = labels[j] == JudgeLabel::kWinB ? 1.0 : 0.0;
    const double alpha = Logistic(logits.alpha_logit[j]);
    const double beta = Logistic(logits.beta_logit[j]);
    grads->reliability.alpha_logit[j] -= w1 * (y - alpha);
    grads->reliability.beta_logit[j] -= w0 * ((1.0 - y) - beta);
  }
  return -lse;
}

}  // namespace internal

// -sum over records of the per-pair log-likelihood for one head.
inline double BatchNll(std::span<const PreferenceRecord> records,
                       const ItemTable& items, const EvaluatorModel& model,
                       const std::string& head_name) {
  const auto& head = model.Head(head_name);
  const auto& logits = model.panel.Head(head_name);
  double nll = 0.0;
  for (const auto& record : records) {
    nll += internal::RecordNll(record, items, head, logits, model.panel,
                               head_name, nullptr);
  }
  return nll;
}

struct NllAndGradients {
  double nll = 0.0;
  GradientBundle gradients;
};

inline NllAndGradients BatchNllAndGradients(
    std::span<const PreferenceRecord> records, const ItemTable& items,
    const EvaluatorModel& model, const std::string& head_name) {
  const auto& head = model.Head(head_name);
  const auto& logits = model.panel.Head(head_name);
  NllAndGradients out;
  auto& g = out.gradients.heads[head_name];
  g = HeadGradients::ZerosLike(head, model.panel.judges.size());
  for (const auto& record : records) {
    out.nll += internal::RecordNll(record, items, head, logits, model.panel,
                                   head_name, &g);
  }
  return out;
}

// Exact gradient of BatchNll for every trainable parameter of one head.
inline GradientBundle ComputeGradients(
    std::span<const PreferenceRecord> records, const ItemTable& items,
    const EvaluatorModel& model, const std::string& head_name) {
  return BatchNllAndGradients(records, items, model, head_name).gradients;
}

}  // namespace dialeval

#endif  // DIALEVAL_LIKELIHOOD_HPP_
