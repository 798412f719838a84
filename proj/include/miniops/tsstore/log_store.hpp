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

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/tsstore/series_key.hpp"

namespace miniops::tsstore {

struct LogFilter {
  std::optional<std::string> level;
  std::optional<std::string> server;
  std::optional<std::string> contains;  // substring of the message
  EpochMs from = std::numeric_limits<EpochMs>::min();
  EpochMs to = std::numeric_limits<EpochMs>::max();
  std::size_t limit = 0;  // 0 = no limit
};

bool matches(const LogFilter& f, const LogEvent& e);

struct LogStoreOptions {
  EpochMs partition_ms = kMsPerHour;
  EpochMs retention_ms = 30 * kMsPerDay;
  std::optional<std::filesystem::path> data_dir;
  bool sync = true;
};

/// Append-only log-event store, partitioned by time. Results come back time-ordered,
/// ties in arrival order.
class LogStore {
 public:
  explicit LogStore(LogStoreOptions options = {});

  // Throws Error(invalid_argument) for an event with an empty message; nothing is stored then.
  void store(std::span<const LogEvent> events);
  std::vector<LogEvent> query(const LogFilter& filter) const;
  std::vector<EpochMs> enforce_retention(EpochMs now);
  std::size_t size() const;

 private:
  EpochMs partition_of(EpochMs ts) const;
  std::filesystem::path file_for(EpochMs start) const;

  LogStoreOptions options_;
  mutable std::shared_mutex mu_;
  std::map<EpochMs, std::vector<LogEvent>> partitions_;
};

}  // namespace miniops::tsstore
