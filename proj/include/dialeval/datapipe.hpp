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

// Dataset construction: dialogue records, the judge annotation-sheet parser,
// and the corpus filters (turn count, position swap, label balance, response
// length gap).

#ifndef DIALEVAL_DATAPIPE_HPP_
#define DIALEVAL_DATAPIPE_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/core.hpp"
#include "json.hpp"

namespace dialeval {

// ---------------------------------------------------------------------------
// Dialogues

enum class Speaker : std::uint8_t { kHuman, kAssistant };

inline std::string_view ToString(Speaker s) {
  return s == Speaker::kHuman ? "Human" : "Assistant";
}

struct Turn {
  Speaker speaker;
  std::string text;
};

struct DialogueRecord {
  std::string id;
  std::vector<Turn> turns;
};

inline constexpr std::size_t kMinHumanTurns = 2;
inline constexpr std::size_t kMaxHumanTurns = 10;

inline std::size_t HumanTurnCount(const DialogueRecord& d) {
  return static_cast<std::size_t>(
      std::count_if(d.turns.begin(), d.turns.end(),
                    [](const Turn& t) { return t.speaker == Speaker::kHuman; }));
}

// Alternating turns that start with Human.
inline bool TurnsAlternate(const DialogueRecord& d) {
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const Speaker want = (i % 2 == 0) ? Speaker::kHuman : Speaker::kAssistant;
    if (d.turns[i].speaker != want) return false;
  }
  return !d.turns.empty();
}

inline bool IsValidDialogue(const DialogueRecord& d) {
  const auto humans = HumanTurnCount(d);
  return TurnsAlternate(d) && humans >= kMinHumanTurns &&
         humans <= kMaxHumanTurns;
}

// Keeps dialogues with 2..10 human turns in strict alternation.
inline std::vector<DialogueRecord> TurnCountFilter(
    std::span<const DialogueRecord> dialogues) {
  std::vector<DialogueRecord> kept;
  for (const auto& d : dialogues) {
    if (IsValidDialogue(d)) kept.push_back(d);
  }
  return kept;
}

// Whitespace-separated tokens summed over all assistant turns.
inline std::size_t AssistantWordCount(const DialogueRecord& d) {
  std::size_t n = 0;
  for (const auto& t : d.turns) {
    if (t.speaker != Speaker::kAssistant) continue;
    bool in_word = false;
    for (unsigned char c : t.text) {
      const bool space = std::isspace(c) != 0;
      if (!space && !in_word) ++n;
      in_word = !space;
    }
  }
  return n;
}

inline constexpr std::size_t kDefaultMaxWordGap = 10;

inline bool WithinLengthGap(const DialogueRecord& a, const DialogueRecord& b,
                            std::size_t max_words = kDefaultMaxWordGap) {
  const auto wa = AssistantWordCount(a);
  const auto wb = AssistantWordCount(b);
  return (wa > wb ? wa - wb : wb - wa) <= max_words;
}

// Record-level length filter; every referenced item needs a dialogue.
inline std::vector<PreferenceRecord> LengthDiffFilter(
    std::span<const PreferenceRecord> records,
    const std::map<std::string, DialogueRecord>& dialogues,
    std::size_t max_words = kDefaultMaxWordGap) {
  auto find = [&](const std::string& id,
                  const std::string& pair) -> const DialogueRecord& {
    auto it = dialogues.find(id);
    if (it == dialogues.end()) {
      Fail(ErrorKind::kInvalidArgument,
           "record " + pair + ": no dialogue text for item " + id);
    }
    return it->second;
  };
  std::vector<PreferenceRecord> kept;
  for (const auto& r : records) {
    if (WithinLengthGap(find(r.item_a, r.pair_id), find(r.item_b, r.pair_id),
                        max_words)) {
      kept.push_back(r);
    }
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Annotation sheets: one label per dimension plus Overall.

struct AnnotationSheet {
  std::map<std::string, JudgeLabel> labels;

  JudgeLabel at(std::string_view head) const {
    return labels.at(std::string(head));
  }
  bool operator==(const AnnotationSheet&) const = default;
};

enum class ParseMode { kStrict, kLenient };

// The canonical 11 lines, one single-key JSON object per line.
inline std::string RenderSheet(const AnnotationSheet& sheet) {
  std::string out;
  for (auto head : kAllHeads) {
    out += "{\"";
    out += head;
    out += "\": \"";
    out += ToString(sheet.at(head));
    out += "\"}\n";
  }
  return out;
}

namespace internal {

inline std::size_t LineOf(std::string_view text, std::size_t offset) {
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + offset, '\n'));
}

inline void CheckComplete(const AnnotationSheet& sheet, std::string_view text) {
  for (auto head : kAllHeads) {
    if (!sheet.labels.count(std::string(head))) {
      throw ParseError("missing dimension " + std::string(head),
                       LineOf(text, text.size()), text.size());
    }
  }
}

inline AnnotationSheet ParseStrict(std::string_view text) {
  AnnotationSheet sheet;
  std::size_t line_no = 0;
  std::size_t objects = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    const std::size_t line_start = pos;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (nl == std::string_view::npos) break;
      continue;
    }
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || obj.size() != 1) {
      throw ParseError("expected a single-key JSON object", line_no,
                       line_start);
    }
    const auto& [key, value] = *obj.items().begin();
    if (!IsKnownHead(key)) {
      throw ParseError("unknown dimension " + key, line_no, line_start);
    }
    JudgeLabel label;
    if (!value.is_string() ||
        !TryParseLabel(value.get<std::string>(), &label)) {
      throw ParseError("illegal value for " + key + " (want A, B or Fair)",
                       line_no, line_start);
    }
    ++objects;
    auto [it, inserted] = sheet.labels.emplace(key, label);
    if (!inserted) {
      throw ParseError(
          it->second == label ? "duplicate dimension " + key
                              : "duplicate dimension " + key +
                                    " with conflicting values",
          line_no, line_start);
    }
    if (nl == std::string_view::npos) break;
  }
  CheckComplete(sheet, text);
  if (objects != kAllHeads.size()) {
    throw ParseError("expected exactly 11 lines", line_no, text.size());
  }
  return sheet;
}

// Scans for `Dimension: value` pairs anywhere in the text, with or without
// JSON quoting; the first occurrence of each dimension wins. Quoted values
// must be legal; unquoted words other than A/B/Fair are treated as prose.
inline AnnotationSheet ParseLenient(std::string_view text) {
  static const std::regex kPair(
      R"re("?\b(Accuracy|Logicality|Conversationality|Relevance|Personalization|Creativity|Interactivity|Emotionality|Informativeness|Safety|Overall)\b"?\s*:\s*(?:"([^"\n]*)"|(Fair|A|B)\b))re");
  AnnotationSheet sheet;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kPair);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const std::string key = m[1].str();
    if (sheet.labels.count(key)) continue;
    const std::string value = m[2].matched ? m[2].str() : m[3].str();
    JudgeLabel label;
    if (!TryParseLabel(value, &label)) {
      const auto off = static_cast<std::size_t>(m.position(0));
      throw ParseError("illegal value \"" + value + "\" for " + key,
                       LineOf(text, off), off);
    }
    sheet.labels.emplace(key, label);
  }
  CheckComplete(sheet, text);
  return sheet;
}

}  // namespace internal

inline AnnotationSheet ParseAnnotation(std::string_view text,
                                       ParseMode mode = ParseMode::kStrict) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw ParseError("empty annotation", 1, 0);
  }
  return mode == ParseMode::kStrict ? internal::ParseStrict(text)
                                    : internal::ParseLenient(text);
}

// ---------------------------------------------------------------------------
// Position-swap consistency

inline constexpr std::string_view kSwapSuffix = "/swap";

inline bool IsSwapId(std::string_view id) {
  return id.size() > kSwapSuffix.size() &&
         id.substr(id.size() - kSwapSuffix.size()) == kSwapSuffix;
}

// A swapped record must carry, for every judge and head of the original,
// exactly the mirrored label (and nothing else).
inline bool SwapConsistent(const PreferenceRecord& original,
                           const PreferenceRecord& swapped) {
  if (original.item_a != swapped.item_b || original.item_b != swapped.item_a) {
    return false;
  }
  if (original.labels.size() != swapped.labels.size()) return false;
  for (const auto& [judge, heads] : original.labels) {
    auto jt = swapped.labels.find(judge);
    if (jt == swapped.labels.end() || jt->second.size() != heads.size()) {
      return false;
    }
    for (const auto& [head, label] : heads) {
      auto ht = jt->second.find(head);
      if (ht == jt->second.end() || ht->second != Mirror(label)) return false;
    }
  }
  return true;
}

// Input holds originals and their "<pair_id>/swap" counterparts in any order.
// Returns the consistent originals sorted by pair_id.
inline std::vector<PreferenceRecord> PositionSwapFilter(
    std::span<const PreferenceRecord> records) {
  std::map<std::string, const PreferenceRecord*> originals, swaps;
  for (const auto& r : records) {
    auto& target = IsSwapId(r.pair_id) ? swaps : originals;
    const std::string key =
        IsSwapId(r.pair_id)
            ? r.pair_id.substr(0, r.pair_id.size() - kSwapSuffix.size())
            : r.pair_id;
    if (!target.emplace(key, &r).second) {
      Fail(ErrorKind::kInvalidArgument, "duplicate pair id " + r.pair_id);
    }
  }
  std::string orphans;
  for (const auto& [id, r] : originals) {
    if (!swaps.count(id)) orphans += (orphans.empty() ? "" : ", ") + id;
  }
  for (const auto& [id, r] : swaps) {
    if (!originals.count(id)) {
      orphans += (orphans.empty() ? "" : ", ") + id + std::string(kSwapSuffix);
    }
  }
  if (!orphans.empty()) {
    Fail(ErrorKind::kInvalidArgument,
         "records without a swap counterpart: " + orphans);
  }
  std::vector<PreferenceRecord> kept;
  for (const auto& [id, r] : originals) {
    if (SwapConsistent(*r, *swaps.at(id))) kept.push_back(*r);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Label balancing

// Majority over all judges' labels for `head` (Fair votes included); any tie
// for the top count, or no votes, is Fair.
inline JudgeLabel MajorityLabel(const PreferenceRecord& record,
                                const std::string& head) {
  std::size_t a = 0, b = 0, fair = 0;
  for (const auto& [judge, heads] : record.labels) {
    auto it = heads.find(head);
    if (it == heads.end()) continue;
    switch (it->second) {
      case JudgeLabel::kWinA: ++a; break;
      case JudgeLabel::kWinB: ++b; break;
      case JudgeLabel::kFair: ++fair; break;
    }
  }
  if (a > b && a > fair) return JudgeLabel::kWinA;
  if (b > a && b > fair) return JudgeLabel::kWinB;
  return JudgeLabel::kFair;
}

struct LabelRatios {
  double a = 0.40;
  double b = 0.40;
  double fair = 0.20;
};

// Largest subset whose majority-label proportions match `ratios` to within
// one record per class. Selection inside a class is a seeded uniform draw;
// output keeps input order.
inline std::vector<PreferenceRecord> BalanceLabels(
    std::span<const PreferenceRecord> records, const std::string& head,
    const LabelRatios& ratios, std::uint64_t seed) {
  const std::array<double, 3> r{ratios.a, ratios.b, ratios.fair};
  for (double x : r) {
    if (!(x >= 0)) Fail(ErrorKind::kInvalidArgument, "ratios must be >= 0");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    Fail(ErrorKind::kInvalidArgument, "ratios must sum to 1");
  }
  std::array<std::vector<std::size_t>, 3> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    members[static_cast<std::size_t>(MajorityLabel(records[i], head))]
        .push_back(i);
  }
  // Total size is bounded by the scarcest class relative to its ratio.
  double total = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < 3; ++c) {
    if (r[c] > 0) {
      total = std::min(total, static_cast<double>(members[c].size()) / r[c]);
    }
  }
  total = std::floor(total + 1e-9);
  Rng rng = MakeRng(seed, "balance/" + head);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto want = std::min<std::size_t>(
        members[c].size(), static_cast<std::size_t>(std::llround(r[c] * total)));
    auto pool = members[c];
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + want);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<PreferenceRecord> out;
  for (auto i : chosen) out.push_back(records[i]);
  return out;
}

}  // namespace dialeval

#endif  // DIALEVAL_DATAPIPE_HPP_
