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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "miniops/common/clock.hpp"

namespace miniops::tsstore {

enum class Aggregate { avg, min, max, sum, count, last };

const char* to_string(Aggregate agg);
std::optional<Aggregate> parse_aggregate(std::string_view name);  // case-insensitive

inline constexpr EpochMs kOpenEnd = std::numeric_limits<EpochMs>::max();

struct TagFilter {
  std::string key;
  std::string value;

  friend auto operator<=>(const TagFilter&, const TagFilter&) = default;
};

/// Canonical query: filters sorted, time range [from, to), optional time buckets
/// and group-by tag keys. to == kOpenEnd means unbounded above.
struct Query {
  std::string metric;
  std::vector<TagFilter> filters;
  EpochMs from = 0;
  EpochMs to = kOpenEnd;
  Aggregate aggregate = Aggregate::last;
  std::optional<EpochMs> bucket_ms;
  std::vector<std::string> group_by;

  friend bool operator==(const Query&, const Query&) = default;
};

// Throws Error(invalid_argument) unless from < to and any bucket width is positive.
void validate(const Query& q);

struct ResultRow {
  std::vector<std::string> group;  // values of the group-by tags, in group_by order
  EpochMs bucket_start = 0;
  double value = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct QueryResult {
  std::vector<std::string> columns;  // group-by keys, "time", aggregate name
  std::vector<ResultRow> rows;       // ordered by (group, bucket_start)
};

// Start of the bucket containing ts; epoch-aligned. Without buckets, the query start.
EpochMs bucket_start(const Query& q, EpochMs ts);

}  // namespace miniops::tsstore
