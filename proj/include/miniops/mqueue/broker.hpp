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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "miniops/common/clock.hpp"

namespace miniops::mqueue {

struct Message {
  std::string topic;
  std::uint64_t offset = 0;
  std::string payload;
  EpochMs enqueued_at = 0;
  std::uint32_t crc = 0;
};

enum class StartAt { earliest, head };

struct BrokerOptions {
  std::uint64_t segment_bytes = 8ull << 20;
  // A consumed segment is still kept until it is at least this old.
  EpochMs retention_floor_ms = 0;
  bool sync = true;
  // 0 = unbounded. Appends that would exceed it fail with Errc::storage.
  std::uint64_t capacity_bytes = 0;
};

struct TopicStats {
  std::uint64_t first_offset = 0;
  std::uint64_t head = 0;
  std::size_t segments = 0;
  std::map<std::string, std::uint64_t> committed;
};

// [a-z0-9._-]+
bool valid_name(std::string_view name);

/// Embedded single-node topic log.
///
/// On disk, every topic is a directory of segment files named by their first
/// offset ({first_offset:020d}.seg), each a run of
/// [u32 LE length][payload][u32 LE CRC32(payload)] records, plus one
/// offsets/{group}.json file per consumer group holding {"committed": n}.
/// Publishes are flushed to stable storage before they return.
class Broker {
 public:
  explicit Broker(std::filesystem::path root, BrokerOptions options = {},
                  const Clock& clock = system_clock());
  ~Broker();

  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  std::uint64_t publish(const std::string& topic, std::string_view payload);

  // All-or-nothing append of (topic, payload) entries, possibly spanning topics.
  // Per-topic order follows entry order. Returns the last offset per topic.
  std::map<std::string, std::uint64_t> publish_batch(
      const std::vector<std::pair<std::string, std::string>>& entries);

  // Messages from the group's committed offset, contiguous, at most max_messages.
  std::vector<Message> poll(const std::string& group, const std::string& topic,
                            std::size_t max_messages) const;

  // committed = max(committed, offset). offset may not exceed the head.
  void commit(const std::string& group, const std::string& topic, std::uint64_t offset);

  // Deletes rolled segments every group has consumed and that passed the retention floor.
  std::size_t trim(const std::string& topic);

  void register_group(const std::string& group, const std::string& topic, StartAt start);

  bool has_topic(const std::string& topic) const;
  bool has_group(const std::string& group, const std::string& topic) const;
  std::uint64_t head(const std::string& topic) const;
  std::uint64_t committed(const std::string& group, const std::string& topic) const;
  TopicStats stats(const std::string& topic) const;
  std::vector<std::string> topics() const;
  std::uint64_t bytes_used() const;

  const std::filesystem::path& root() const { return root_; }

 private:
  struct Topic;

  Topic& topic_or_create(const std::string& name);
  Topic* find_topic(const std::string& name) const;
  std::unique_ptr<Topic> load_topic(const std::string& name);

  std::filesystem::path root_;
  BrokerOptions options_;
  const Clock& clock_;
  mutable std::shared_mutex topics_mu_;
  std::map<std::string, std::unique_ptr<Topic>> topics_;
  std::uint64_t bytes_used_ = 0;  // guarded by bytes_mu_
  mutable std::mutex bytes_mu_;
};

}  // namespace miniops::mqueue
