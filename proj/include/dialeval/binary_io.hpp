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

// Little-endian byte encoding, CRC32 framing, and atomic file replacement
// shared by the model, embedding-store and embedding-cache formats.

#ifndef DIALEVAL_BINARY_IO_HPP_
#define DIALEVAL_BINARY_IO_HPP_

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/error.hpp"

namespace dialeval {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large payloads.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n =
        std::min<std::size_t>(bytes.size() - pos, std::size_t{1} << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

class ByteWriter {
 public:
  void Raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void U16(std::uint16_t v) { Raw(&v, sizeof v); }
  void U32(std::uint32_t v) { Raw(&v, sizeof v); }
  void U64(std::uint64_t v) { Raw(&v, sizeof v); }
  void F32(float v) { Raw(&v, sizeof v); }
  void F64(double v) { Raw(&v, sizeof v); }
  void Magic(std::string_view magic) { Raw(magic.data(), magic.size()); }

  // u16 length prefix followed by UTF-8 bytes.
  void Str16(std::string_view s) {
    if (s.size() > 0xFFFF) {
      Fail(ErrorKind::kInvalidArgument,
           "string too long for u16 length prefix: " + std::to_string(s.size()));
    }
    U16(static_cast<std::uint16_t>(s.size()));
    Raw(s.data(), s.size());
  }

  // Appends CRC32 of everything written so far.
  void SealWithCrc() { U32(Crc32(buf_)); }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::vector<std::uint8_t> release() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Excludes the trailing 4-byte CRC from subsequent reads. Structure is
  // parsed first so that short files report truncation; VerifyCrc() runs
  // after parsing.
  void ReserveCrcTrailer(std::string_view what) {
    if (bytes_.size() < pos_ + 4) {
      Fail(ErrorKind::kTruncated, std::string(what) + ": file too short");
    }
    full_ = bytes_;
    bytes_ = bytes_.first(bytes_.size() - 4);
  }

  void VerifyCrc(std::string_view what) const {
    const std::size_t body = full_.size() - 4;
    std::uint32_t stored;
    std::memcpy(&stored, full_.data() + body, 4);
    if (Crc32(full_.first(body)) != stored) {
      Fail(ErrorKind::kCrcMismatch, std::string(what) + ": CRC32 mismatch");
    }
  }

  void ExpectMagic(std::string_view magic, std::string_view what) {
    if (bytes_.size() < magic.size() ||
        std::memcmp(bytes_.data(), magic.data(), magic.size()) != 0) {
      Fail(ErrorKind::kBadMagic, std::string(what) + ": bad magic, expected \"" +
                                     std::string(magic) + "\"");
    }
    pos_ = magic.size();
  }

  void Raw(void* out, std::size_t n) {
    Need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint16_t U16() { return Get<std::uint16_t>(); }
  std::uint32_t U32() { return Get<std::uint32_t>(); }
  std::uint64_t U64() { return Get<std::uint64_t>(); }
  float F32() { return Get<float>(); }
  double F64() { return Get<double>(); }

  std::string Str16() {
    const std::uint16_t n = U16();
    Need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  template <typename T>
  T Get() {
    T v;
    Raw(&v, sizeof v);
    return v;
  }

  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      Fail(ErrorKind::kTruncated,
           "truncated input at byte " + std::to_string(pos_) + " (need " +
               std::to_string(n) + " more)");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::span<const std::uint8_t> full_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> ReadFileBytes(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

// Writes to a sibling temp file and renames it into place.
inline void WriteFileAtomic(const std::filesystem::path& path,
                            std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorKind::kIo, "cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorKind::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) Fail(ErrorKind::kIo, "rename failed: " + path.string() + ": " +
                                   ec.message());
}

inline void WriteFileAtomic(const std::filesystem::path& path,
                            std::string_view text) {
  WriteFileAtomic(path, std::span<const std::uint8_t>(
                            reinterpret_cast<const std::uint8_t*>(text.data()),
                            text.size()));
}

}  // namespace dialeval

#endif  // DIALEVAL_BINARY_IO_HPP_
