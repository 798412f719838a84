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
#include <string>
#include <vector>

#include "miniops/tsstore/series_key.hpp"

namespace miniops::tsstore {

struct SeriesColumn {
  SeriesKey key;
  std::vector<EpochMs> ts;  // strictly increasing
  std::vector<double> values;
};

struct SegmentIndexEntry {
  SeriesKey key;
  std::uint64_t count = 0;
  EpochMs first_ts = 0;
  EpochMs last_ts = 0;
  std::uint64_t ts_offset = 0;
  std::uint64_t ts_length = 0;
  std::uint64_t value_offset = 0;
  std::uint64_t value_length = 0;
};

/// Immutable encoded block covering the time partition [start, end).
/// Layout is described in docs/segment-format.md.
class Segment {
 public:
  static Segment build(EpochMs start, EpochMs end, const std::vector<SeriesColumn>& columns);

  // Throws Error(corrupt) on a bad magic, checksum or index.
  static Segment parse(std::string bytes);

  const std::string& bytes() const { return bytes_; }
  EpochMs start() const { return start_; }
  EpochMs end() const { return end_; }
  const std::vector<SegmentIndexEntry>& index() const { return index_; }
  const SegmentIndexEntry* find(const std::string& canonical) const;
  SeriesColumn read(const SegmentIndexEntry& entry) const;
  std::uint64_t point_count() const;

 private:
  std::string bytes_;
  EpochMs start_ = 0;
  EpochMs end_ = 0;
  std::vector<SegmentIndexEntry> index_;  // sorted by canonical key
};

}  // namespace miniops::tsstore
