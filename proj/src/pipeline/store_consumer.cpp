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

#include "miniops/pipeline/store_consumer.hpp"

#include <cstdio>

#include "miniops/common/error.hpp"
#include "miniops/common/json.hpp"

namespace miniops::pipeline {

tsstore::MetricPoint to_point(const Record& r) {
  return {tsstore::SeriesKey(r.name, r.tags, r.server), r.ts, r.value};
}

tsstore::LogEvent to_log(const Record& r) {
  TagMap fields = r.tags;
  if (!r.name.empty()) fields.emplace("name", r.name);
  return {r.ts, r.server, r.level, r.message, std::move(fields)};
}

StoreConsumer::StoreConsumer(mqueue::Broker& broker, tsstore::MetricStore& metrics, tsstore::LogStore& logs,
                             ConsumerOptions options)
    : broker_(broker), metrics_(metrics), logs_(logs), options_(std::move(options)) {}

StoreConsumer::~StoreConsumer() { stop(); }

std::size_t StoreConsumer::poll_once() {
  std::lock_guard guard(poll_mu_);
  const auto topics = options_.topics.empty() ? broker_.topics() : options_.topics;
  std::size_t consumed = 0;
  for (const auto& topic : topics) {
    if (!broker_.has_topic(topic)) continue;
    if (!broker_.has_group(options_.group, topic)) {
      try {
        broker_.register_group(options_.group, topic, mqueue::StartAt::earliest);
      } catch (const Error& e) {
        if (e.code() != Errc::already_exists) throw;
      }
    }
    const auto messages = broker_.poll(options_.group, topic, options_.max_messages);
    if (messages.empty()) continue;

    std::vector<tsstore::MetricPoint> points;
    std::vector<tsstore::LogEvent> events;
    std::uint64_t malformed = 0;
    for (const auto& m : messages) {
      try {
        const Record r = record_from_json(Json::parse(m.payload));
        if (r.kind == RecordKind::metric) {
          points.push_back(to_point(r));
        } else {
          events.push_back(to_log(r));
        }
      } catch (const std::exception& e) {
        // Validated at ingest; anything else is skipped rather than wedging the group.
        std::fprintf(stderr, "store consumer: skipping %s@%llu: %s\n", topic.c_str(),
                     static_cast<unsigned long long>(m.offset), e.what());
        ++malformed;
      }
    }
    metrics_.write_points(points);
    if (!events.empty()) logs_.store(events);
    broker_.commit(options_.group, topic, messages.back().offset + 1);

    consumed += messages.size();
    std::lock_guard lock(stats_mu_);
    stats_.messages += messages.size();
    stats_.points += points.size();
    stats_.logs += events.size();
    stats_.malformed += malformed;
  }
  return consumed;
}

std::size_t StoreConsumer::drain() {
  std::size_t total = 0;
  while (std::size_t n = poll_once()) total += n;
  return total;
}

void StoreConsumer::start() {
  std::lock_guard lock(run_mu_);
  if (thread_.joinable()) return;
  stopping_ = false;
  thread_ = std::thread([this] {
    std::unique_lock lock(run_mu_);
    while (!stopping_) {
      lock.unlock();
      std::size_t n = 0;
      try {
        n = poll_once();
      } catch (const std::exception& e) {
        std::fprintf(stderr, "store consumer: %s\n", e.what());
      }
      lock.lock();
      if (n == 0) run_cv_.wait_for(lock, std::chrono::milliseconds(options_.idle_sleep_ms), [this] { return stopping_; });
    }
  });
}

void StoreConsumer::stop() {
  {
    std::lock_guard lock(run_mu_);
    stopping_ = true;
  }
  run_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

ConsumerStats StoreConsumer::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

}  // namespace miniops::pipeline
