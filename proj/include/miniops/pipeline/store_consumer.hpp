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
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "miniops/mqueue/broker.hpp"
#include "miniops/tsstore/log_store.hpp"
#include "miniops/tsstore/store.hpp"

namespace miniops::pipeline {

struct ConsumerOptions {
  std::string group = "store";
  std::vector<std::string> topics;  // empty: every topic the broker knows
  std::size_t max_messages = 2000;
  EpochMs idle_sleep_ms = 20;       // background loop only
};

struct ConsumerStats {
  std::uint64_t messages = 0;
  std::uint64_t points = 0;
  std::uint64_t logs = 0;
  std::uint64_t malformed = 0;
};

// Series key for a wire record: metric name, tags and the server tag.
tsstore::MetricPoint to_point(const Record& r);
tsstore::LogEvent to_log(const Record& r);

/// Moves queued records into the metric and log stores, committing each topic's
/// offset only after the store write returned.
class StoreConsumer {
 public:
  StoreConsumer(mqueue::Broker& broker, tsstore::MetricStore& metrics, tsstore::LogStore& logs,
                ConsumerOptions options = {});
  ~StoreConsumer();

  // One pass over all topics. Returns the number of messages consumed.
  std::size_t poll_once();
  // Repeats poll_once until a pass consumes nothing.
  std::size_t drain();

  void start();
  void stop();

  ConsumerStats stats() const;

 private:
  mqueue::Broker& broker_;
  tsstore::MetricStore& metrics_;
  tsstore::LogStore& logs_;
  ConsumerOptions options_;

  std::mutex poll_mu_;  // one pass at a time
  mutable std::mutex stats_mu_;
  ConsumerStats stats_;

  std::mutex run_mu_;
  std::condition_variable run_cv_;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace miniops::pipeline
