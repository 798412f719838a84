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

#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "miniops/common/record.hpp"

namespace miniops::agent {

struct AppendReport {
  std::vector<Batch> evicted;  // oldest first
  bool volatile_entry = false;       // the disk write failed; held in memory only
};

/// Bounded FIFO of undelivered batches. With a directory, each batch is one file
/// named by a zero-padded sequence number, so order survives restarts.
/// One appender and one drainer may run concurrently.
class Spool {
 public:
  Spool(std::optional<std::filesystem::path> dir, std::size_t capacity_batches, bool sync = true);

  AppendReport append(const Batch& batch);
  std::optional<Batch> front() const;
  // Removes the entry with this id if still present. Returns whether it was.
  bool remove(const std::string& batch_id);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::vector<std::string> batch_ids() const;
  std::uint64_t evictions() const;
  std::size_t volatile_entries() const;

 private:
  struct Entry {
    std::uint64_t seq;
    Batch batch;
    bool is_volatile;
  };
  std::filesystem::path file_for(std::uint64_t seq) const;

  std::optional<std::filesystem::path> dir_;
  std::size_t capacity_;
  bool sync_;
  mutable std::mutex mu_;
  std::deque<Entry> entries_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace miniops::agent
