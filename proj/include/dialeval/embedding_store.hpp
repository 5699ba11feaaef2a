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

// Embedding store file ("MTDV", version 1), little-endian:
//
//   magic "MTDV" | u32 version | u32 dim | u64 rows
//   f32[rows * dim] row-major
//   rows x (u16 length + UTF-8 id)
//   u32 CRC32 of all preceding bytes

#ifndef DIALEVAL_EMBEDDING_STORE_HPP_
#define DIALEVAL_EMBEDDING_STORE_HPP_

#include <cmath>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dialeval/binary_io.hpp"
#include "dialeval/core.hpp"

namespace dialeval {

inline constexpr std::string_view kStoreMagic = "MTDV";
inline constexpr std::uint32_t kStoreVersion = 1;

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::uint32_t dim) : dim_(dim) {}

  void Add(const std::string& id, std::span<const float> vec) {
    if (vec.size() != dim_) throw DimensionError(dim_, vec.size(), "row " + id);
    for (float v : vec) {
      if (!std::isfinite(v)) {
        Fail(ErrorKind::kInvalidArgument, "row " + id + " is not finite");
      }
    }
    if (!index_.emplace(id, ids_.size()).second) {
      Fail(ErrorKind::kInvalidArgument, "duplicate embedding id " + id);
    }
    ids_.push_back(id);
    matrix_.insert(matrix_.end(), vec.begin(), vec.end());
  }

  void Add(const std::string& id, std::span<const double> vec) {
    std::vector<float> f(vec.begin(), vec.end());
    Add(id, std::span<const float>(f));
  }

  bool Contains(const std::string& id) const { return index_.count(id) > 0; }

  std::span<const float> Row(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
      Fail(ErrorKind::kInvalidArgument, "no embedding for id " + id);
    }
    return {matrix_.data() + it->second * dim_, dim_};
  }

  std::uint32_t dim() const { return dim_; }
  std::size_t rows() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& matrix() const { return matrix_; }

  // f64 view for the model math.
  ItemTable ToItemTable() const {
    ItemTable table(dim_);
    std::vector<double> row(dim_);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      for (std::size_t k = 0; k < dim_; ++k) row[k] = matrix_[i * dim_ + k];
      table.Add(ids_[i], row);
    }
    return table;
  }

  bool operator==(const EmbeddingStore& o) const {
    return dim_ == o.dim_ && ids_ == o.ids_ &&
           matrix_.size() == o.matrix_.size() &&
           std::memcmp(matrix_.data(), o.matrix_.data(),
                       matrix_.size() * sizeof(float)) == 0;
  }

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> matrix_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::vector<std::uint8_t> EncodeStore(const EmbeddingStore& store) {
  ByteWriter w;
  w.Magic(kStoreMagic);
  w.U32(kStoreVersion);
  w.U32(store.dim());
  w.U64(store.rows());
  for (float v : store.matrix()) w.F32(v);
  for (const auto& id : store.ids()) w.Str16(id);
  w.SealWithCrc();
  return w.release();
}

inline EmbeddingStore DecodeStore(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.ExpectMagic(kStoreMagic, "embedding store");
  r.ReserveCrcTrailer("embedding store");
  if (const auto version = r.U32(); version != kStoreVersion) {
    Fail(ErrorKind::kInvalidArgument,
         "embedding store: unsupported version " + std::to_string(version));
  }
  const std::uint32_t dim = r.U32();
  const std::uint64_t rows = r.U64();
  if (rows > 0 && dim == 0) {
    Fail(ErrorKind::kInvalidArgument, "embedding store: zero dim with rows");
  }
  if (dim > 0 && rows > r.remaining() / (std::uint64_t{dim} * 4)) {
    Fail(ErrorKind::kTruncated, "embedding store: payload shorter than header");
  }
  std::vector<float> matrix(rows * dim);
  for (float& v : matrix) v = r.F32();
  std::vector<std::string> ids;
  ids.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) ids.push_back(r.Str16());
  r.VerifyCrc("embedding store");
  if (r.remaining() != 0) {
    Fail(ErrorKind::kInvalidArgument, "embedding store: trailing bytes");
  }
  EmbeddingStore store(dim);
  for (std::uint64_t i = 0; i < rows; ++i) {
    store.Add(ids[i], std::span<const float>(matrix.data() + i * dim, dim));
  }
  return store;
}

inline void WriteEmbeddingStore(const std::filesystem::path& path,
                                const EmbeddingStore& store) {
  WriteFileAtomic(path, EncodeStore(store));
}

inline EmbeddingStore ReadEmbeddingStore(const std::filesystem::path& path) {
  return DecodeStore(ReadFileBytes(path));
}

}  // namespace dialeval

#endif  // DIALEVAL_EMBEDDING_STORE_HPP_
