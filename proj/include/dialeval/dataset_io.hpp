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

// JSON-lines dataset files.
//
// Labels, one object per pair:
//   {"pair_id": ..., "item_a": ..., "item_b": ...,
//    "labels": {judge: {head: "A" | "B" | "Fair"}}}
// Dialogues, one object per item:
//   {"id": ..., "turns": [{"speaker": "Human" | "Assistant", "text": ...}]}

#ifndef DIALEVAL_DATASET_IO_HPP_
#define DIALEVAL_DATASET_IO_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dialeval/binary_io.hpp"
#include "dialeval/core.hpp"
#include "dialeval/datapipe.hpp"
#include "dialeval/embedding_store.hpp"
#include "json.hpp"

namespace dialeval {

using nlohmann::json;

// Calls fn(object, line_number) for every non-blank line. Errors carry the
// file name and line.
inline void ForEachJsonLine(
    const std::filesystem::path& path,
    const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      Fail(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                  ": not a JSON object");
    }
    try {
      fn(obj, line_no);
    } catch (const json::exception& e) {
      Fail(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                  ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line_no) +
                                ": " + e.what());
    }
  }
}

inline std::string JsonLines(std::span<const json> objects) {
  std::string out;
  for (const auto& o : objects) {
    out += o.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

inline json RecordToJson(const PreferenceRecord& r) {
  json labels = json::object();
  for (const auto& [judge, heads] : r.labels) {
    json h = json::object();
    for (const auto& [head, label] : heads) h[head] = ToString(label);
    labels[judge] = h;
  }
  return {{"pair_id", r.pair_id},
          {"item_a", r.item_a},
          {"item_b", r.item_b},
          {"labels", labels}};
}

inline PreferenceRecord RecordFromJson(const json& j) {
  static const std::set<std::string> kKeys{"pair_id", "item_a", "item_b",
                                           "labels"};
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.count(k)) Fail(ErrorKind::kParse, "unknown key " + k);
  }
  PreferenceRecord r;
  r.pair_id = j.at("pair_id").get<std::string>();
  r.item_a = j.at("item_a").get<std::string>();
  r.item_b = j.at("item_b").get<std::string>();
  for (const auto& [judge, heads] : j.at("labels").items()) {
    if (!heads.is_object()) {
      Fail(ErrorKind::kParse, "labels of judge " + judge + " must be an object");
    }
    for (const auto& [head, label] : heads.items()) {
      r.labels[judge][head] = ParseLabel(label.get<std::string>());
    }
  }
  ValidateRecord(r);
  return r;
}

inline std::vector<PreferenceRecord> ReadLabels(
    const std::filesystem::path& path) {
  std::vector<PreferenceRecord> out;
  std::set<std::string> ids;
  ForEachJsonLine(path, [&](const json& j, std::size_t) {
    auto r = RecordFromJson(j);
    if (!ids.insert(r.pair_id).second) {
      Fail(ErrorKind::kInvalidArgument, "duplicate pair_id " + r.pair_id);
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline void WriteLabels(const std::filesystem::path& path,
                        std::span<const PreferenceRecord> records) {
  std::vector<json> lines;
  for (const auto& r : records) lines.push_back(RecordToJson(r));
  WriteFileAtomic(path, JsonLines(lines));
}

// ---------------------------------------------------------------------------

inline json DialogueToJson(const DialogueRecord& d) {
  json turns = json::array();
  for (const auto& t : d.turns) {
    turns.push_back({{"speaker", ToString(t.speaker)}, {"text", t.text}});
  }
  return {{"id", d.id}, {"turns", turns}};
}

inline DialogueRecord DialogueFromJson(const json& j) {
  DialogueRecord d;
  d.id = j.at("id").get<std::string>();
  for (const auto& t : j.at("turns")) {
    const auto speaker = t.at("speaker").get<std::string>();
    Turn turn;
    if (speaker == "Human") {
      turn.speaker = Speaker::kHuman;
    } else if (speaker == "Assistant") {
      turn.speaker = Speaker::kAssistant;
    } else {
      Fail(ErrorKind::kParse, "unknown speaker " + speaker);
    }
    turn.text = t.at("text").get<std::string>();
    d.turns.push_back(std::move(turn));
  }
  return d;
}

inline std::vector<DialogueRecord> ReadDialogues(
    const std::filesystem::path& path) {
  std::vector<DialogueRecord> out;
  std::set<std::string> ids;
  ForEachJsonLine(path, [&](const json& j, std::size_t) {
    auto d = DialogueFromJson(j);
    if (!ids.insert(d.id).second) {
      Fail(ErrorKind::kInvalidArgument, "duplicate dialogue id " + d.id);
    }
    out.push_back(std::move(d));
  });
  return out;
}

inline void WriteDialogues(const std::filesystem::path& path,
                           std::span<const DialogueRecord> dialogues) {
  std::vector<json> lines;
  for (const auto& d : dialogues) lines.push_back(DialogueToJson(d));
  WriteFileAtomic(path, JsonLines(lines));
}

// ---------------------------------------------------------------------------

struct PreferenceDataset {
  std::vector<PreferenceRecord> records;
  EmbeddingStore store;
};

// Loads labels and embeddings and checks that every referenced item has an
// embedding row.
inline PreferenceDataset LoadPreferenceDataset(
    const std::filesystem::path& labels_path,
    const std::filesystem::path& embeddings_path) {
  PreferenceDataset ds;
  ds.store = ReadEmbeddingStore(embeddings_path);
  ds.records = ReadLabels(labels_path);
  for (const auto& r : ds.records) {
    for (const auto* id : {&r.item_a, &r.item_b}) {
      if (!ds.store.Contains(*id)) {
        Fail(ErrorKind::kInvalidArgument,
             labels_path.string() + ": record " + r.pair_id +
                 " references item " + *id + " missing from " +
                 embeddings_path.string());
      }
    }
  }
  return ds;
}

}  // namespace dialeval

#endif  // DIALEVAL_DATASET_IO_HPP_
