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

#include <gtest/gtest.h>

#include <cstdlib>

#include "dialeval/embed_client.hpp"
#include "mock_embed_server.hpp"
#include "test_util.hpp"

namespace dialeval {
namespace {

std::vector<DialogueRecord> Dialogues(std::size_t n) {
  std::vector<DialogueRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"dlg" + std::to_string(i),
                   {{Speaker::kHuman, "question " + std::to_string(i)},
                    {Speaker::kAssistant, "answer " + std::to_string(i * 7)}}});
  }
  return out;
}

EmbedEndpointConfig ConfigFor(const testing::MockEmbedServer& server,
                              const std::string& cache_name) {
  EmbedEndpointConfig c;
  c.base_url = server.url();
  c.cache_dir = testing::TempDir(cache_name).string();
  c.backoff_base_ms = 1;
  c.timeout_ms = 5000;
  c.api_key_env = "DIALEVAL_TEST_UNSET_KEY";
  return c;
}

TEST(RenderDialogueTest, SpeakerPrefixedLines) {
  const DialogueRecord d{"x", {{Speaker::kHuman, "hi"},
                              {Speaker::kAssistant, "hello"}}};
  EXPECT_EQ(RenderDialogue(d), "Human: hi\nAssistant: hello");
  EXPECT_EQ(RenderDialogue(DialogueRecord{"e", {}}), "");
}

TEST(CacheKeyTest, StableAndSensitive) {
  const auto k = EmbeddingCacheKey("m", "text");
  EXPECT_EQ(k, EmbeddingCacheKey("m", "text"));
  EXPECT_EQ(k.size(), 64u);
  EXPECT_NE(k, EmbeddingCacheKey("m2", "text"));
  EXPECT_NE(k, EmbeddingCacheKey("m", "text "));
  // The separator keeps (model, text) boundaries unambiguous.
  EXPECT_NE(EmbeddingCacheKey("ab", "c"), EmbeddingCacheKey("a", "bc"));
}

TEST(EmbedClientTest, RowsMatchServiceVectorsInInputOrder) {
  testing::MockEmbedServer server(4);
  auto config = ConfigFor(server, "embed_rows");
  config.batch_size = 3;
  const auto dialogues = Dialogues(7);
  const auto result = FetchEmbeddings(config, dialogues);
  EXPECT_EQ(result.store.dim(), 4u);
  ASSERT_EQ(result.store.rows(), 7u);
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    EXPECT_EQ(result.store.ids()[i], dialogues[i].id);
    const auto want = testing::MockVector(RenderDialogue(dialogues[i]), 4);
    const auto row = result.store.Row(dialogues[i].id);
    EXPECT_TRUE(std::equal(row.begin(), row.end(), want.begin()));
  }
  EXPECT_EQ(result.stats.requests, 3u);
  EXPECT_EQ(result.stats.network_calls, 3u);
  EXPECT_EQ(result.stats.cache_hits, 0u);
}

TEST(EmbedClientTest, TransientFailuresAreRetried) {
  testing::MockEmbedServer server(4);
  auto config = ConfigFor(server, "embed_retry");
  config.batch_size = 16;
  server.FailNext(2, 503);
  const auto result = FetchEmbeddings(config, Dialogues(3));
  EXPECT_EQ(server.requests(), 3);
  EXPECT_EQ(result.stats.network_calls, 3u);
  EXPECT_EQ(result.store.rows(), 3u);
}

TEST(EmbedClientTest, RateLimitIsRetryable) {
  testing::MockEmbedServer server(4);
  auto config = ConfigFor(server, "embed_429");
  server.FailNext(1, 429);
  EXPECT_EQ(FetchEmbeddings(config, Dialogues(2)).store.rows(), 2u);
  EXPECT_EQ(server.requests(), 2);
}

TEST(EmbedClientTest, CachedRerunMakesNoCallsAndSameBytes) {
  testing::MockEmbedServer server(6);
  auto config = ConfigFor(server, "embed_cache");
  config.batch_size = 2;
  const auto dialogues = Dialogues(5);
  const auto first = FetchEmbeddings(config, dialogues);
  const int calls = server.requests();
  const auto second = FetchEmbeddings(config, dialogues);
  EXPECT_EQ(server.requests(), calls);
  EXPECT_EQ(second.stats.network_calls, 0u);
  EXPECT_EQ(second.stats.cache_hits, 5u);
  EXPECT_EQ(EncodeStore(first.store), EncodeStore(second.store));
}

TEST(EmbedClientTest, ModelNameSeparatesCacheEntries) {
  testing::MockEmbedServer server(4);
  auto config = ConfigFor(server, "embed_model");
  FetchEmbeddings(config, Dialogues(2));
  config.model_name = "other-model";
  const auto result = FetchEmbeddings(config, Dialogues(2));
  EXPECT_EQ(result.stats.cache_hits, 0u);
}

TEST(EmbedClientTest, CorruptCacheEntryIsAMiss) {
  testing::MockEmbedServer server(4);
  auto config = ConfigFor(server, "embed_corrupt");
  const auto dialogues = Dialogues(2);
  FetchEmbeddings(config, dialogues);
  const auto key = EmbeddingCacheKey(config.model_name,
                                     RenderDialogue(dialogues[0]));
  const auto path = std::filesystem::path(config.cache_dir) / key;
  auto bytes = ReadFileBytes(path);
  bytes[bytes.size() / 2] ^= 0xff;
  WriteFileAtomic(path, bytes);
  const auto result = FetchEmbeddings(config, dialogues);
  EXPECT_EQ(result.stats.cache_hits, 1u);
  EXPECT_EQ(result.stats.network_calls, 1u);
  const auto want = testing::MockVector(RenderDialogue(dialogues[0]), 4);
  const auto row = result.store.Row("dlg0");
  EXPECT_TRUE(std::equal(row.begin(), row.end(), want.begin()));
}

TEST(EmbedClientTest, InFlightBound) {
  testing::MockEmbedServer server(4);
  server.set_delay(std::chrono::milliseconds(30));
  auto config = ConfigFor(server, "embed_inflight");
  config.batch_size = 1;
  config.max_in_flight = 2;
  FetchEmbeddings(config, Dialogues(10));
  EXPECT_LE(server.max_in_flight(), 2);
  EXPECT_EQ(server.requests(), 10);
}

TEST(EmbedClientTest, PermanentErrorNamesTheRecord) {
  testing::MockEmbedServer server(4);
  server.AlwaysFail("question 3", 400);
  auto config = ConfigFor(server, "embed_400");
  config.batch_size = 1;
  config.max_in_flight = 1;
  try {
    FetchEmbeddings(config, Dialogues(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNetwork);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("dlg3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("400"), std::string::npos) << msg;
  }
}

TEST(EmbedClientTest, ExhaustedRetriesListEveryAttempt) {
  testing::MockEmbedServer server(4);
  server.AlwaysFail("question", 503);
  auto config = ConfigFor(server, "embed_exhaust");
  config.max_retries = 2;
  try {
    FetchEmbeddings(config, Dialogues(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNetwork);
    const std::string msg = e.what();
    for (const char* part : {"attempt 1", "attempt 2", "attempt 3", "dlg0"}) {
      EXPECT_NE(msg.find(part), std::string::npos) << msg;
    }
  }
  EXPECT_EQ(server.requests(), 3);
}

TEST(EmbedClientTest, UnreachableServiceIsNetworkError) {
  EmbedEndpointConfig config;
  {
    testing::MockEmbedServer server(4);
    config = ConfigFor(server, "embed_down");
  }
  config.max_retries = 1;
  try {
    FetchEmbeddings(config, Dialogues(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNetwork);
  }
}

TEST(EmbedClientTest, DimensionDisagreementIsRejected) {
  testing::MockEmbedServer server(4);
  server.set_dim_override([](const std::string& text) {
    return text.find("question 2") != std::string::npos ? 5u : 4u;
  });
  auto config = ConfigFor(server, "embed_dims");
  try {
    FetchEmbeddings(config, Dialogues(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("dlg2"), std::string::npos);
  }
}

TEST(EmbedClientTest, BearerTokenFromEnvironment) {
  testing::MockEmbedServer server(4);
  auto config = ConfigFor(server, "embed_auth");
  config.api_key_env = "DIALEVAL_TEST_KEY";
  ::setenv("DIALEVAL_TEST_KEY", "s3cret", 1);
  FetchEmbeddings(config, Dialogues(1));
  EXPECT_EQ(server.last_authorization(), "Bearer s3cret");
  ::unsetenv("DIALEVAL_TEST_KEY");
  config.cache_dir = testing::TempDir("embed_auth2").string();
  FetchEmbeddings(config, Dialogues(1));
  EXPECT_EQ(server.last_authorization(), "");
}

TEST(EmbedClientTest, EmptyInputMakesNoCalls) {
  testing::MockEmbedServer server(4);
  const auto result = FetchEmbeddings(ConfigFor(server, "embed_empty"), {});
  EXPECT_EQ(result.store.rows(), 0u);
  EXPECT_EQ(server.requests(), 0);
}

TEST(EmbedClientTest, ConfigValidation) {
  EmbedEndpointConfig c;
  c.cache_dir = testing::TempDir("embed_cfg").string();
  auto bad = [&](auto edit) {
    auto copy = c;
    edit(copy);
    EXPECT_THROW(FetchEmbeddings(copy, {}), Error);
  };
  bad([](auto& x) { x.max_in_flight = 0; });
  bad([](auto& x) { x.timeout_ms = 0; });
  bad([](auto& x) { x.max_retries = -1; });
  bad([](auto& x) { x.batch_size = 0; });
  bad([](auto& x) { x.backoff_factor = 0.5; });
  bad([](auto& x) { x.model_name.clear(); });
}

}  // namespace
}  // namespace dialeval
