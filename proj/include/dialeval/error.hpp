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

#ifndef DIALEVAL_ERROR_HPP_
#define DIALEVAL_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dialeval {

// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind : std::uint8_t {
  kInvalidArgument,  // bad config, bad input data, unknown ids
  kDimensionMismatch,
  kParse,            // annotation or JSON-lines parse failure
  kBadMagic,
  kCrcMismatch,
  kTruncated,
  kIo,
  kNetwork,
  kNumeric,          // non-finite loss, underflow in oracle products
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kBadMagic: return "bad_magic";
    case ErrorKind::kCrcMismatch: return "crc_mismatch";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNetwork: return "network";
    case ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  DimensionError(std::size_t expected, std::size_t actual,
                 std::string_view context = {})
      : Error(ErrorKind::kDimensionMismatch,
              Describe(expected, actual, context)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  static std::string Describe(std::size_t expected, std::size_t actual,
                              std::string_view context) {
    std::string msg = "dimension mismatch: expected " +
                      std::to_string(expected) + ", got " +
                      std::to_string(actual);
    if (!context.empty()) msg += " (" + std::string(context) + ")";
    return msg;
  }

  std::size_t expected_;
  std::size_t actual_;
};

// Parse failure with a 1-based line and a 0-based byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t offset)
      : Error(ErrorKind::kParse, message + " (line " + std::to_string(line) +
                                     ", offset " + std::to_string(offset) +
                                     ")"),
        line_(line),
        offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dialeval

#endif  // DIALEVAL_ERROR_HPP_
