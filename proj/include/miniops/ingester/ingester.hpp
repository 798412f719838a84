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

#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/common/json.hpp"
#include "miniops/common/record.hpp"
#include "miniops/mqueue/broker.hpp"

namespace miniops::ingester {

/// Pure per-topic transformation applied before publication. It may re-topic,
/// enrich or drop records, and must be deterministic.
struct TransformHook {
  std::string hook_id;
  std::string input_topic;
  std::function<std::vector<Record>(std::vector<Record>)> apply;
};

TransformHook tag_enrich_hook(std::string hook_id, std::string topic, TagMap tags);
// Drops metric records whose value is below min_value; logs pass through.
TransformHook drop_below_hook(std::string hook_id, std::string topic, double min_value);

// {"hook_id", "topic", "type": "tag_enrich", "tags": {...}} or
// {"hook_id", "topic", "type": "drop_below", "min_value": x}
TransformHook hook_from_json(const Json& j);

/// Remembers batch ids for at least horizon_ms. Ids live in fixed-width time
/// buckets so expiry drops whole buckets.
class DedupWindow {
 public:
  enum class Claim { fresh, duplicate };

  explicit DedupWindow(EpochMs horizon_ms = kMsPerDay, EpochMs bucket_ms = kMsPerHour);

  // Atomically claims an id. A concurrent claim of an id that is still in flight
  // waits for the first holder to commit or release it.
  Claim claim(const std::string& batch_id, EpochMs now);
  void commit(const std::string& batch_id, EpochMs now);
  void release(const std::string& batch_id);

  bool contains(const std::string& batch_id) const;
  std::size_t size() const;

 private:
  void expire_locked(EpochMs now);

  EpochMs horizon_ms_;
  EpochMs bucket_ms_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::set<std::string> in_flight_;
  std::unordered_map<std::string, EpochMs> seen_;          // id -> bucket start
  std::map<EpochMs, std::vector<std::string>> buckets_;
};

struct IngesterOptions {
  EpochMs dedup_horizon_ms = kMsPerDay;
};

struct Ack {
  std::string batch_id;
  bool duplicate = false;
  std::size_t published = 0;
  std::map<std::string, std::uint64_t> last_offsets;  // per topic
};

struct IngesterStats {
  std::uint64_t batches = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t rejected = 0;
  std::uint64_t unavailable = 0;
  std::uint64_t records_published = 0;
};

/// Validates agent batches, applies hooks and publishes each batch atomically.
/// Queue payloads are the record JSON plus "_batch" (batch id) and "_seq" (position
/// in the post-transform batch).
class Ingester {
 public:
  Ingester(mqueue::Broker& broker, IngesterOptions options = {}, const Clock& clock = system_clock());

  // Throws Error(already_exists) if the topic already has a hook.
  void register_hook(TransformHook hook);
  std::vector<std::string> hooked_topics() const;

  // gzip-compressed JSON batch. Throws Error(invalid_argument) for bad compression or
  // JSON, SchemaError for schema violations, Error(unavailable) when the queue fails.
  Ack receive_batch(std::string_view compressed);
  Ack receive_json(std::string_view json_text);
  Ack receive(const Batch& batch);

  // Fault injection: while unavailable, every batch fails with Error(unavailable).
  void set_available(bool available);
  bool available() const;

  IngesterStats stats() const;

 private:
  std::vector<std::pair<std::string, std::string>> transform(const Batch& batch) const;

  mqueue::Broker& broker_;
  const Clock& clock_;
  DedupWindow dedup_;

  mutable std::mutex hooks_mu_;
  std::map<std::string, TransformHook> hooks_;  // input topic -> hook

  mutable std::mutex stats_mu_;
  IngesterStats stats_;
  std::atomic<bool> available_{true};
};

}  // namespace miniops::ingester
