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

// Client for an external embeddings HTTP service (the common
// POST {base_url}/v1/embeddings convention) with an on-disk cache, bounded
// concurrency and retry with exponential backoff.

#ifndef DIALEVAL_EMBED_CLIENT_HPP_
#define DIALEVAL_EMBED_CLIENT_HPP_

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dialeval/binary_io.hpp"
#include "dialeval/datapipe.hpp"
#include "dialeval/digest.hpp"
#include "dialeval/embedding_store.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dialeval {

struct EmbedEndpointConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string model_name = "text-embedding";
  std::string api_key_env = "DIALEVAL_API_KEY";  // env var holding the key
  int timeout_ms = 30000;
  int max_retries = 4;
  int max_in_flight = 4;
  int batch_size = 16;  // texts per request
  std::string cache_dir = ".dialeval-cache";
  int backoff_base_ms = 250;
  double backoff_factor = 2.0;
};

inline void ValidateEndpointConfig(const EmbedEndpointConfig& c) {
  auto bad = [](const std::string& what) {
    Fail(ErrorKind::kInvalidArgument, "embed config: " + what);
  };
  if (c.max_in_flight < 1) bad("max_in_flight must be >= 1");
  if (c.timeout_ms <= 0) bad("timeout_ms must be > 0");
  if (c.max_retries < 0) bad("max_retries must be >= 0");
  if (c.batch_size < 1) bad("batch_size must be >= 1");
  if (c.backoff_base_ms < 0 || !(c.backoff_factor >= 1.0)) {
    bad("backoff must be non-negative and non-shrinking");
  }
  if (c.model_name.empty()) bad("model_name is empty");
  if (c.cache_dir.empty()) bad("cache_dir is empty");
}

// Canonical text: "Human: ..." / "Assistant: ..." lines joined by '\n'.
inline std::string RenderDialogue(const DialogueRecord& record) {
  std::string out;
  for (std::size_t i = 0; i < record.turns.size(); ++i) {
    if (i) out += '\n';
    out += ToString(record.turns[i].speaker);
    out += ": ";
    out += record.turns[i].text;
  }
  return out;
}

inline std::string EmbeddingCacheKey(std::string_view model_name,
                                     std::string_view text) {
  std::string buf;
  buf.reserve(model_name.size() + text.size() + 1);
  buf.append(model_name);
  buf.push_back('\0');
  buf.append(text);
  return Sha256Hex(buf);
}

// One file per key, named by the hex digest. Entry layout:
//   "MTDC" | str16 model_name | u32 dim | f32[dim] | u32 CRC32
// Unreadable or mismatched entries are treated as misses.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) Fail(ErrorKind::kIo, "cannot create cache dir " + dir_.string());
  }

  std::optional<std::vector<float>> Load(const std::string& key,
                                         std::string_view model_name) const {
    const auto path = dir_ / key;
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
      const auto bytes = ReadFileBytes(path);
      ByteReader r(bytes);
      r.ExpectMagic("MTDC", "cache entry");
      r.ReserveCrcTrailer("cache entry");
      if (r.Str16() != model_name) return std::nullopt;
      const std::uint32_t dim = r.U32();
      if (std::uint64_t{dim} * 4 != r.remaining()) return std::nullopt;
      std::vector<float> v(dim);
      for (float& x : v) x = r.F32();
      r.VerifyCrc("cache entry");
      return v;
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  void Store(const std::string& key, std::string_view model_name,
             std::span<const float> vec) {
    ByteWriter w;
    w.Magic("MTDC");
    w.Str16(model_name);
    w.U32(static_cast<std::uint32_t>(vec.size()));
    for (float x : vec) w.F32(x);
    w.SealWithCrc();
    std::lock_guard<std::mutex> lock(write_mu_);
    WriteFileAtomic(dir_ / key, w.bytes());
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex write_mu_;
};

struct FetchStats {
  std::size_t cache_hits = 0;
  std::size_t requests = 0;       // logical batches sent to the service
  std::size_t network_calls = 0;  // HTTP attempts, retries included
};

struct FetchResult {
  EmbeddingStore store;
  FetchStats stats;
};

namespace internal {

struct BatchOutcome {
  std::vector<std::vector<float>> vectors;
  std::size_t attempts = 0;
};

inline bool Retryable(int status) { return status == 429 || status >= 500; }

inline BatchOutcome PostBatch(const EmbedEndpointConfig& config,
                              const std::vector<std::string>& texts,
                              const std::string& first_record,
                              std::atomic<std::size_t>& network_calls) {
  httplib::Client client(config.base_url);
  const auto timeout = std::chrono::milliseconds(config.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config.api_key_env.c_str());
      key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const std::string body =
      nlohmann::json{{"model", config.model_name}, {"input", texts}}.dump();

  thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
  std::string attempt_log;
  BatchOutcome out;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      const double base = config.backoff_base_ms *
                          std::pow(config.backoff_factor, attempt - 1);
      const double jitter =
          std::uniform_real_distribution<double>(0.0, 0.25)(jitter_rng);
      std::this_thread::sleep_for(
          std::chrono::duration<double, std::milli>(base * (1.0 + jitter)));
    }
    ++out.attempts;
    ++network_calls;
    auto res = client.Post("/v1/embeddings", headers, body, "application/json");
    if (!res) {
      attempt_log += " [attempt " + std::to_string(attempt + 1) + ": " +
                     httplib::to_string(res.error()) + "]";
      continue;
    }
    if (res->status == 200) {
      auto j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded() || !j.contains("data") || !j["data"].is_array()) {
        Fail(ErrorKind::kNetwork, "malformed embeddings response for batch "
                                  "starting at record " + first_record);
      }
      out.vectors.assign(texts.size(), {});
      try {
        for (const auto& entry : j["data"]) {
          const auto idx = entry.at("index").get<std::size_t>();
          if (idx >= texts.size()) {
            Fail(ErrorKind::kNetwork, "response index out of range");
          }
          out.vectors[idx] = entry.at("embedding").get<std::vector<float>>();
        }
      } catch (const nlohmann::json::exception& e) {
        Fail(ErrorKind::kNetwork,
             std::string("malformed embeddings response: ") + e.what());
      }
      for (const auto& v : out.vectors) {
        if (v.empty()) {
          Fail(ErrorKind::kNetwork, "response is missing an embedding for "
                                    "batch starting at record " + first_record);
        }
      }
      return out;
    }
    attempt_log += " [attempt " + std::to_string(attempt + 1) + ": HTTP " +
                   std::to_string(res->status) + "]";
    if (!Retryable(res->status)) {
      Fail(ErrorKind::kNetwork, "permanent HTTP " + std::to_string(res->status) +
                                    " for batch starting at record " +
                                    first_record + ":" + attempt_log);
    }
  }
  Fail(ErrorKind::kNetwork, "retries exhausted for batch starting at record " +
                                first_record + ":" + attempt_log);
}

}  // namespace internal

// Embeds every dialogue, serving cache hits locally. Rows follow input order.
inline FetchResult FetchEmbeddings(const EmbedEndpointConfig& config,
                                   std::span<const DialogueRecord> records) {
  ValidateEndpointConfig(config);
  EmbeddingCache cache(config.cache_dir);
  FetchResult result;

  const std::size_t n = records.size();
  std::vector<std::string> texts(n), keys(n);
  std::vector<std::vector<float>> vectors(n);
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < n; ++i) {
    texts[i] = RenderDialogue(records[i]);
    keys[i] = EmbeddingCacheKey(config.model_name, texts[i]);
    if (auto hit = cache.Load(keys[i], config.model_name)) {
      vectors[i] = std::move(*hit);
      ++result.stats.cache_hits;
    } else {
      misses.push_back(i);
    }
  }

  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  const std::size_t n_batches = (misses.size() + bs - 1) / bs;
  std::atomic<std::size_t> next_batch{0};
  std::atomic<std::size_t> network_calls{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::optional<Error> first_error;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t b = next_batch.fetch_add(1);
      if (b >= n_batches) return;
      const std::size_t lo = b * bs;
      const std::size_t hi = std::min(misses.size(), lo + bs);
      std::vector<std::string> batch_texts;
      for (std::size_t k = lo; k < hi; ++k) {
        batch_texts.push_back(texts[misses[k]]);
      }
      try {
        auto outcome = internal::PostBatch(config, batch_texts,
                                           records[misses[lo]].id,
                                           network_calls);
        for (std::size_t k = lo; k < hi; ++k) {
          const std::size_t i = misses[k];
          vectors[i] = std::move(outcome.vectors[k - lo]);
          cache.Store(keys[i], config.model_name, vectors[i]);
        }
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = e;
        failed = true;
      }
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(
      static_cast<std::size_t>(config.max_in_flight), n_batches);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) throw *first_error;
  result.stats.requests = n_batches;
  result.stats.network_calls = network_calls.load();

  std::uint32_t dim = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      dim = static_cast<std::uint32_t>(vectors[i].size());
    } else if (vectors[i].size() != dim) {
      Fail(ErrorKind::kInvalidArgument,
           "embedding dimension disagreement: record " + records[i].id +
               " has " + std::to_string(vectors[i].size()) + ", expected " +
               std::to_string(dim));
    }
  }
  result.store = EmbeddingStore(dim);
  for (std::size_t i = 0; i < n; ++i) {
    result.store.Add(records[i].id, std::span<const float>(vectors[i]));
  }
  return result;
}

}  // namespace dialeval

#endif  // DIALEVAL_EMBED_CLIENT_HPP_
