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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/common/json.hpp"

namespace miniops {

enum class RecordKind { metric, log };

const char* to_string(RecordKind kind);

using TagMap = std::map<std::string, std::string>;

/// One wire record: a metric sample or a log line, tagged with its destination topic.
struct Record {
  std::string topic;
  RecordKind kind = RecordKind::metric;
  std::string server;
  std::string name;
  EpochMs ts = 0;
  double value = 0.0;    // metric only
  std::string level;     // log only
  std::string message;   // log only
  TagMap tags;

  friend bool operator==(const Record&, const Record&) = default;
};

struct Batch {
  std::string batch_id;
  std::string agent_id;
  EpochMs sent_at = 0;
  std::vector<Record> records;

  friend bool operator==(const Batch&, const Batch&) = default;
};

/// Raised when a batch document violates the wire schema. record_index is the
/// position of the first offending record, or nullopt for envelope errors.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::optional<std::size_t> record_index, const std::string& what)
      : std::runtime_error(what), record_index_(record_index) {}

  std::optional<std::size_t> record_index() const noexcept { return record_index_; }

 private:
  std::optional<std::size_t> record_index_;
};

Json record_to_json(const Record& r);
Record record_from_json(const Json& j);  // throws SchemaError (no index)

Json batch_to_json(const Batch& b);
Batch batch_from_json(const Json& j);    // throws SchemaError

}  // namespace miniops
