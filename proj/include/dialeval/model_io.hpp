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

// Model file ("MTDE", version 1). Layout, all little-endian:
//
//   magic "MTDE" | u32 version | u32 embedding_dim | u32 head_count
//   per head:  str16 name | u32 layer_count
//              per layer: u32 rows | u32 cols | f64[rows*cols] | f64[rows]
//              f64 sigma
//   u32 judge_count
//   per judge: str16 name | per head (file order): f64 alpha_logit,
//                                                   f64 beta_logit
//   u32 CRC32 of all preceding bytes
//
// Heads are written in name order; the panel uses the same order.

#ifndef DIALEVAL_MODEL_IO_HPP_
#define DIALEVAL_MODEL_IO_HPP_

#include <filesystem>
#include <vector>

#include "dialeval/binary_io.hpp"
#include "dialeval/core.hpp"

namespace dialeval {

inline constexpr std::string_view kModelMagic = "MTDE";
inline constexpr std::uint32_t kModelVersion = 1;

inline std::vector<std::uint8_t> EncodeModel(const EvaluatorModel& model) {
  ValidateModel(model);
  ByteWriter w;
  w.Magic(kModelMagic);
  w.U32(kModelVersion);
  w.U32(static_cast<std::uint32_t>(model.embedding_dim));
  w.U32(static_cast<std::uint32_t>(model.heads.size()));
  for (const auto& [name, head] : model.heads) {
    w.Str16(name);
    w.U32(static_cast<std::uint32_t>(head.layers.size()));
    for (const auto& layer : head.layers) {
      w.U32(static_cast<std::uint32_t>(layer.rows));
      w.U32(static_cast<std::uint32_t>(layer.cols));
      for (double v : layer.weights) w.F64(v);
      for (double v : layer.biases) w.F64(v);
    }
    w.F64(head.sigma);
  }
  w.U32(static_cast<std::uint32_t>(model.panel.judges.size()));
  for (std::size_t j = 0; j < model.panel.judges.size(); ++j) {
    w.Str16(model.panel.judges[j]);
    for (const auto& [name, head] : model.heads) {
      const auto& logits = model.panel.Head(name);
      w.F64(logits.alpha_logit[j]);
      w.F64(logits.beta_logit[j]);
    }
  }
  w.SealWithCrc();
  return w.release();
}

inline EvaluatorModel DecodeModel(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.ExpectMagic(kModelMagic, "model file");
  r.ReserveCrcTrailer("model file");
  if (const auto version = r.U32(); version != kModelVersion) {
    Fail(ErrorKind::kInvalidArgument,
         "model file: unsupported version " + std::to_string(version));
  }
  EvaluatorModel model;
  model.embedding_dim = r.U32();
  const std::uint32_t head_count = r.U32();
  std::vector<std::string> head_order;
  for (std::uint32_t h = 0; h < head_count; ++h) {
    std::string name = r.Str16();
    QualityHead head;
    const std::uint32_t layer_count = r.U32();
    for (std::uint32_t l = 0; l < layer_count; ++l) {
      const std::uint32_t rows = r.U32();
      const std::uint32_t cols = r.U32();
      // Reject absurd shapes before allocating.
      if (static_cast<std::uint64_t>(rows) * cols * 8 > r.remaining()) {
        Fail(ErrorKind::kTruncated, "model file: layer larger than file");
      }
      DenseLayer layer = DenseLayer::Zeros(rows, cols);
      for (double& v : layer.weights) v = r.F64();
      for (double& v : layer.biases) v = r.F64();
      head.layers.push_back(std::move(layer));
    }
    head.sigma = r.F64();
    if (!model.heads.emplace(name, std::move(head)).second) {
      Fail(ErrorKind::kInvalidArgument, "model file: duplicate head " + name);
    }
    head_order.push_back(std::move(name));
  }
  const std::uint32_t judge_count = r.U32();
  for (const auto& name : head_order) {
    model.panel.heads[name] = {std::vector<double>(judge_count),
                               std::vector<double>(judge_count)};
  }
  for (std::uint32_t j = 0; j < judge_count; ++j) {
    model.panel.judges.push_back(r.Str16());
    for (const auto& name : head_order) {
      auto& logits = model.panel.heads[name];
      logits.alpha_logit[j] = r.F64();
      logits.beta_logit[j] = r.F64();
    }
  }
  r.VerifyCrc("model file");
  if (r.remaining() != 0) {
    Fail(ErrorKind::kInvalidArgument, "model file: trailing bytes");
  }
  ValidateModel(model);
  return model;
}

inline void WriteModel(const std::filesystem::path& path,
                       const EvaluatorModel& model) {
  WriteFileAtomic(path, EncodeModel(model));
}

inline EvaluatorModel ReadModel(const std::filesystem::path& path) {
  return DecodeModel(ReadFileBytes(path));
}

}  // namespace dialeval

#endif  // DIALEVAL_MODEL_IO_HPP_
