/*
    Copyright (c) 2026 The miniops Authors
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
        http://www.apache.org/licenses/LICENSE-2.0
    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include <gtest/gtest.h>

#include "miniops/common/codec.hpp"
#include "miniops/common/error.hpp"
#include "miniops/common/fsutil.hpp"
#include "miniops/common/http.hpp"
#include "miniops/common/record.hpp"
#include "support/temp_dir.hpp"

namespace miniops {
namespace {

TEST(Codec, GzipRoundTripProducesRfc1952Member) {
  const std::string text(10000, 'x');
  const std::string packed = gzip_compress(text);
  ASSERT_GE(packed.size(), 18u);
  EXPECT_EQ(static_cast<unsigned char>(packed[0]), 0x1f);
  EXPECT_EQ(static_cast<unsigned char>(packed[1]), 0x8b);
  EXPECT_LT(packed.size(), text.size() / 10);
  EXPECT_EQ(gzip_decompress(packed), text);
}

TEST(Codec, MalformedGzipIsInvalidArgument) {
  try {
    gzip_decompress("definitely not gzip");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
  }
  std::string packed = gzip_compress("hello world hello world");
  packed.resize(packed.size() / 2);
  EXPECT_THROW(gzip_decompress(packed), Error);
}

TEST(Codec, Crc32CheckValue) { EXPECT_EQ(crc32("123456789"), 0xCBF43926u); }

TEST(FsUtil, AtomicWriteReplacesContent) {
  testing::TempDir dir;
  write_file_atomic(dir / "a.json", "one");
  write_file_atomic(dir / "a.json", "two");
  EXPECT_EQ(read_file(dir / "a.json"), "two");
  EXPECT_FALSE(std::filesystem::exists(dir / "a.json.tmp"));
}

Json valid_batch() {
  return Json::parse(R"({"batch_id":"b1","agent_id":"a1","sent_at":5,"records":[
    {"topic":"metrics","kind":"metric","server":"s1","name":"cpu.load","ts":1000,"value":0.5,"tags":{"site":"A"}},
    {"topic":"logs","kind":"log","server":"s1","name":"syslog","ts":1001,"level":"ERROR","message":"disk","tags":{}}]})");
}

TEST(Record, BatchRoundTrip) {
  const Batch b = batch_from_json(valid_batch());
  ASSERT_EQ(b.records.size(), 2u);
  EXPECT_EQ(b.records[0].tags.at("site"), "A");
  EXPECT_EQ(b.records[1].kind, RecordKind::log);
  EXPECT_EQ(batch_from_json(batch_to_json(b)), b);
}

TEST(Record, SchemaErrorNamesFirstOffendingRecord) {
  Json j = valid_batch();
  j["records"][1].erase("ts");
  j["records"].push_back(j["records"][1]);
  try {
    batch_from_json(j);
    FAIL();
  } catch (const SchemaError& e) {
    ASSERT_TRUE(e.record_index().has_value());
    EXPECT_EQ(*e.record_index(), 1u);
    EXPECT_NE(std::string(e.what()).find("ts"), std::string::npos);
  }
}

TEST(Record, SchemaRejections) {
  auto reject = [](Json j) { EXPECT_THROW(batch_from_json(j), SchemaError) << j.dump(); };
  Json j = valid_batch();
  j["records"][0]["value"] = "high";
  reject(j);
  j = valid_batch();
  j["records"][0]["kind"] = "trace";
  reject(j);
  j = valid_batch();
  j["records"][1]["message"] = "";
  reject(j);
  j = valid_batch();
  j["records"] = Json::array();
  reject(j);
  j = valid_batch();
  j["records"][0]["ts"] = 1.5;
  reject(j);
  j = valid_batch();
  j.erase("batch_id");
  try {
    batch_from_json(j);
  } catch (const SchemaError& e) {
    EXPECT_FALSE(e.record_index().has_value());
  }
}

TEST(Http, ParseUrl) {
  auto ep = http::parse_url("http://127.0.0.1:8080/v1/batch");
  EXPECT_EQ(ep.host, "127.0.0.1");
  EXPECT_EQ(ep.port, 8080);
  EXPECT_EQ(http::parse_url("localhost:99").port, 99);
  EXPECT_THROW(http::parse_url("http://host:abc"), Error);
}

}  // namespace
}  // namespace miniops
