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

// Evaluation protocols: single-rating correlations, the pairwise decision
// rule with a tie threshold, and pairwise / per-dimension accuracies.

#ifndef DIALEVAL_METRICS_HPP_
#define DIALEVAL_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dialeval/core.hpp"
#include "json.hpp"

namespace dialeval {

// Pair decisions share the A / B / Fair alphabet with judge labels.
using PairDecision = JudgeLabel;

inline constexpr double kDefaultTieThreshold = 0.01;

// Presentation squashing into (0, 1): logistic(raw / sqrt 2).
inline double NormalizeScore(double raw) {
  return Logistic(raw / std::numbers::sqrt2);
}

enum class TieRule {
  kNormalized,  // |n(a) - n(b)| < tau on the normalized scale (default)
  kRawDiff,     // |a - b| < tau on raw scores; translation invariant
};

inline PairDecision DecideNormalized(double norm_a, double norm_b,
                                     double tie_threshold) {
  if (std::abs(norm_a - norm_b) < tie_threshold) return PairDecision::kFair;
  if (norm_a > norm_b) return PairDecision::kWinA;
  if (norm_b > norm_a) return PairDecision::kWinB;
  return PairDecision::kFair;  // equal with tau == 0
}

inline PairDecision DecidePairwise(double score_a, double score_b,
                                   double tie_threshold = kDefaultTieThreshold,
                                   TieRule rule = TieRule::kNormalized) {
  if (rule == TieRule::kRawDiff) {
    return DecideNormalized(score_a, score_b, tie_threshold);
  }
  return DecideNormalized(NormalizeScore(score_a), NormalizeScore(score_b),
                          tie_threshold);
}

// ---------------------------------------------------------------------------
// Correlations

inline void CheckPaired(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw DimensionError(xs.size(), ys.size(), "correlation inputs");
  }
  if (xs.size() < 2) {
    Fail(ErrorKind::kInvalidArgument, "correlation needs at least 2 points");
  }
}

inline double Pearson(std::span<const double> xs, std::span<const double> ys) {
  CheckPaired(xs, ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    Fail(ErrorKind::kInvalidArgument, "correlation of a zero-variance input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// 1-based ranks; tied values share the mean of their rank block.
inline std::vector<double> AverageRanks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline double Spearman(std::span<const double> xs, std::span<const double> ys) {
  CheckPaired(xs, ys);
  const auto rx = AverageRanks(xs);
  const auto ry = AverageRanks(ys);
  return Pearson(rx, ry);
}

// ---------------------------------------------------------------------------
// Accuracies

enum class AccuracyMode { kWithTie, kWithoutTie };

// with_tie: ternary exact match over all pairs, in percent.
// without_tie: pairs with Fair gold are dropped; `preds` must be argmax
// decisions (tie threshold 0), and a Fair prediction there means an exact
// score tie, credited 0.5.
inline double PairwiseAccuracy(std::span<const PairDecision> preds,
                               std::span<const PairDecision> golds,
                               AccuracyMode mode) {
  if (preds.size() != golds.size()) {
    throw DimensionError(golds.size(), preds.size(), "predictions vs gold");
  }
  double credit = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (mode == AccuracyMode::kWithoutTie) {
      if (golds[i] == PairDecision::kFair) continue;
      ++counted;
      if (preds[i] == PairDecision::kFair) {
        credit += 0.5;
      } else if (preds[i] == golds[i]) {
        credit += 1.0;
      }
    } else {
      ++counted;
      if (preds[i] == golds[i]) credit += 1.0;
    }
  }
  if (counted == 0) {
    Fail(ErrorKind::kInvalidArgument, "no pairs left to score");
  }
  return 100.0 * credit / static_cast<double>(counted);
}

struct ScoredPair {
  double score_a;
  double score_b;
};

// Both accuracy modes from raw scores: with_tie applies the tie rule,
// without_tie re-decides by pure argmax.
inline double PairwiseAccuracyFromScores(std::span<const ScoredPair> pairs,
                                         std::span<const PairDecision> golds,
                                         AccuracyMode mode,
                                         double tie_threshold,
                                         TieRule rule = TieRule::kNormalized) {
  std::vector<PairDecision> preds;
  preds.reserve(pairs.size());
  for (const auto& p : pairs) {
    preds.push_back(mode == AccuracyMode::kWithTie
                        ? DecidePairwise(p.score_a, p.score_b, tie_threshold,
                                         rule)
                        : DecidePairwise(p.score_a, p.score_b, 0.0,
                                         TieRule::kRawDiff));
  }
  return PairwiseAccuracy(preds, golds, mode);
}

struct DimensionAccuracy {
  std::map<std::string, double> per_head;
  double average = 0.0;  // macro average over the dimension heads
};

// Ternary accuracy per head. The macro average runs over the ten dimension
// heads present (Overall, when present, is reported but not averaged).
inline DimensionAccuracy ComputeDimensionAccuracy(
    const std::map<std::string, std::vector<PairDecision>>& preds,
    const std::map<std::string, std::vector<PairDecision>>& golds) {
  if (preds.size() != golds.size()) {
    Fail(ErrorKind::kInvalidArgument, "prediction and gold head sets differ");
  }
  DimensionAccuracy out;
  double sum = 0.0;
  std::size_t dims = 0;
  for (const auto& [head, p] : preds) {
    auto it = golds.find(head);
    if (it == golds.end()) {
      Fail(ErrorKind::kInvalidArgument, "head " + head + " missing from gold");
    }
    const double acc = PairwiseAccuracy(p, it->second, AccuracyMode::kWithTie);
    out.per_head[head] = acc;
    if (head != kOverallHead) {
      sum += acc;
      ++dims;
    }
  }
  if (dims == 0) {
    Fail(ErrorKind::kInvalidArgument, "no dimension heads to average");
  }
  out.average = sum / static_cast<double>(dims);
  return out;
}

// ---------------------------------------------------------------------------
// Report

inline std::string_view ToString(TieRule rule) {
  return rule == TieRule::kNormalized ? "normalized" : "raw-diff";
}

inline TieRule ParseTieRule(std::string_view s) {
  if (s == "normalized") return TieRule::kNormalized;
  if (s == "raw-diff") return TieRule::kRawDiff;
  Fail(ErrorKind::kInvalidArgument,
       "unknown tie mode " + std::string(s) + " (normalized | raw-diff)");
}

struct EvalReport {
  std::optional<std::pair<double, double>> single_rating;  // pearson, spearman
  struct Pairwise {
    double with_tie;
    double without_tie;
    double tie_threshold;
    TieRule mode;
  };
  std::optional<Pairwise> pairwise;
  std::optional<DimensionAccuracy> dimensions;
};

inline nlohmann::json ReportToJson(const EvalReport& r) {
  nlohmann::json j = nlohmann::json::object();
  if (r.single_rating) {
    j["single_rating"] = {{"pearson", r.single_rating->first},
                          {"spearman", r.single_rating->second}};
  }
  if (r.pairwise) {
    j["pairwise"] = {{"with_tie", r.pairwise->with_tie},
                     {"without_tie", r.pairwise->without_tie},
                     {"tie_threshold", r.pairwise->tie_threshold},
                     {"mode", ToString(r.pairwise->mode)}};
  }
  if (r.dimensions) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [h, v] : r.dimensions->per_head) d[h] = v;
    d["average"] = r.dimensions->average;
    j["dimensions"] = d;
  }
  return j;
}

// Structural check of a report object; returns an empty string when valid.
inline std::string ValidateReportJson(const nlohmann::json& j) {
  auto number_in = [](const nlohmann::json& v, double lo, double hi) {
    return v.is_number() && v.get<double>() >= lo && v.get<double>() <= hi;
  };
  if (!j.is_object()) return "report is not an object";
  bool any = false;
  if (j.contains("single_rating")) {
    any = true;
    const auto& s = j["single_rating"];
    if (!s.is_object() || !s.contains("pearson") || !s.contains("spearman") ||
        !number_in(s["pearson"], -1, 1) || !number_in(s["spearman"], -1, 1)) {
      return "bad single_rating section";
    }
  }
  if (j.contains("pairwise")) {
    any = true;
    const auto& p = j["pairwise"];
    if (!p.is_object() || !p.contains("with_tie") ||
        !p.contains("without_tie") || !p.contains("tie_threshold") ||
        !p.contains("mode") || !number_in(p["with_tie"], 0, 100) ||
        !number_in(p["without_tie"], 0, 100) ||
        !p["tie_threshold"].is_number() || !p["mode"].is_string()) {
      return "bad pairwise section";
    }
  }
  if (j.contains("dimensions")) {
    any = true;
    const auto& d = j["dimensions"];
    if (!d.is_object() || !d.contains("average")) {
      return "bad dimensions section";
    }
    for (const auto& [k, v] : d.items()) {
      if (k != "average" && !IsKnownHead(k)) return "unknown head " + k;
      if (!number_in(v, 0, 100)) return "bad accuracy for " + k;
    }
  }
  return any ? "" : "report has no metric sections";
}

}  // namespace dialeval

#endif  // DIALEVAL_METRICS_HPP_
