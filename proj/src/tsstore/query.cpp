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

#include "miniops/tsstore/query.hpp"

#include <algorithm>
#include <cctype>

#include "miniops/common/error.hpp"

namespace miniops::tsstore {

const char* to_string(Aggregate agg) {
  switch (agg) {
    case Aggregate::avg: return "avg";
    case Aggregate::min: return "min";
    case Aggregate::max: return "max";
    case Aggregate::sum: return "sum";
    case Aggregate::count: return "count";
    case Aggregate::last: return "last";
  }
  return "?";
}

std::optional<Aggregate> parse_aggregate(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto agg : {Aggregate::avg, Aggregate::min, Aggregate::max, Aggregate::sum, Aggregate::count, Aggregate::last}) {
    if (lower == to_string(agg)) return agg;
  }
  return std::nullopt;
}

void validate(const Query& q) {
  if (q.from >= q.to) {
    throw Error(Errc::invalid_argument, "malformed time range: from " + std::to_string(q.from) +
                                            " is not before to " + std::to_string(q.to));
  }
  if (q.bucket_ms && *q.bucket_ms <= 0) throw Error(Errc::invalid_argument, "bucket width must be positive");
}

EpochMs bucket_start(const Query& q, EpochMs ts) {
  if (!q.bucket_ms) return q.from;
  const EpochMs w = *q.bucket_ms;
  EpochMs b = ts / w;
  if (ts % w != 0 && ts < 0) --b;
  return b * w;
}

}  // namespace miniops::tsstore
