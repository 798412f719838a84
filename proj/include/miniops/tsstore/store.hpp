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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/tsstore/query.hpp"
#include "miniops/tsstore/segment.hpp"
#include "miniops/tsstore/series_key.hpp"

namespace miniops::tsstore {

struct StoreOptions {
  EpochMs partition_ms = kMsPerHour;
  EpochMs lateness_grace_ms = 5 * kMsPerMinute;
  EpochMs retention_ms = 730 * kMsPerDay;
  // When set, sealed segments and a write-ahead log live here.
  std::optional<std::filesystem::path> data_dir;
  bool sync = true;
};

struct WriteResult {
  std::size_t accepted = 0;
  std::size_t rejected = 0;  // older than the retention floor, or non-finite
};

struct StoreStats {
  std::size_t partitions = 0;
  std::size_t sealed_partitions = 0;
  std::size_t series = 0;
  std::uint64_t sealed_bytes = 0;
};

/// Columnar metric store: hourly partitions, each a mutable buffer plus at most one
/// sealed segment. Duplicate (series, ts) resolve last-write-wins, including writes
/// that land in an already sealed partition.
class MetricStore {
 public:
  explicit MetricStore(StoreOptions options = {}, const Clock& clock = system_clock());
  ~MetricStore();

  MetricStore(const MetricStore&) = delete;
  MetricStore& operator=(const MetricStore&) = delete;

  WriteResult write_points(std::span<const MetricPoint> points);

  // Seals one partition; throws Error(invalid_argument) if its window plus the
  // lateness grace has not passed. Returns the sealed segment.
  std::shared_ptr<const Segment> seal_partition(EpochMs partition_start, EpochMs now);

  // Seals every eligible partition with buffered points. Returns how many.
  std::size_t seal_ready(EpochMs now);

  QueryResult query(const Query& q) const;

  // Drops partitions that end at or before now - retention. Returns their starts.
  std::vector<EpochMs> enforce_retention(EpochMs now);

  // Every stored point of a metric (or all metrics when empty), merged and deduplicated.
  std::vector<MetricPoint> scan(const std::string& metric = {}) const;
  std::uint64_t count_points() const;

  StoreStats stats() const;
  std::vector<EpochMs> partition_starts() const;
  const StoreOptions& options() const { return options_; }

 private:
  struct Partition;

  EpochMs partition_of(EpochMs ts) const;
  std::vector<std::pair<EpochMs, std::shared_ptr<Partition>>> snapshot(EpochMs from, EpochMs to) const;
  void load();
  void rewrite_wal_locked();

  StoreOptions options_;
  const Clock& clock_;

  mutable std::shared_mutex mu_;  // partition map and series catalog
  std::map<EpochMs, std::shared_ptr<Partition>> partitions_;
  std::map<std::string, std::map<std::string, SeriesKey>> catalog_;  // metric -> canonical -> key

  std::mutex wal_mu_;
  int wal_fd_ = -1;
};

}  // namespace miniops::tsstore
