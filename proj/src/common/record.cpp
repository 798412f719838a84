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

#include "miniops/common/record.hpp"

#include <cmath>

namespace miniops {

const char* to_string(RecordKind kind) { return kind == RecordKind::metric ? "metric" : "log"; }

Json record_to_json(const Record& r) {
  Json j{{"topic", r.topic},   {"kind", to_string(r.kind)}, {"server", r.server},
         {"name", r.name},     {"ts", r.ts},                {"tags", r.tags}};
  if (r.kind == RecordKind::metric) {
    j["value"] = r.value;
  } else {
    j["level"] = r.level;
    j["message"] = r.message;
  }
  return j;
}

namespace {

const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::nullopt, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) throw SchemaError(std::nullopt, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t require_int(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer()) {
    throw SchemaError(std::nullopt, std::string("field '") + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

}  // namespace

Record record_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError(std::nullopt, "record must be an object");
  Record r;
  r.topic = require_string(j, "topic");
  if (r.topic.empty()) throw SchemaError(std::nullopt, "field 'topic' must be non-empty");
  const std::string kind = require_string(j, "kind");
  if (kind == "metric") {
    r.kind = RecordKind::metric;
  } else if (kind == "log") {
    r.kind = RecordKind::log;
  } else {
    throw SchemaError(std::nullopt, "field 'kind' must be \"metric\" or \"log\"");
  }
  r.server = require_string(j, "server");
  r.name = require_string(j, "name");
  r.ts = require_int(j, "ts");
  if (r.kind == RecordKind::metric) {
    const Json& v = require(j, "value");
    if (!v.is_number()) throw SchemaError(std::nullopt, "field 'value' must be a number");
    r.value = v.get<double>();
    if (!std::isfinite(r.value)) throw SchemaError(std::nullopt, "field 'value' must be finite");
  } else {
    r.level = require_string(j, "level");
    r.message = require_string(j, "message");
    if (r.message.empty()) throw SchemaError(std::nullopt, "field 'message' must be non-empty");
  }
  if (auto it = j.find("tags"); it != j.end()) {
    if (!it->is_object()) throw SchemaError(std::nullopt, "field 'tags' must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw SchemaError(std::nullopt, "tag '" + k + "' must be a string");
      r.tags.emplace(k, v.get<std::string>());
    }
  }
  return r;
}

Json batch_to_json(const Batch& b) {
  Json records = Json::array();
  for (const auto& r : b.records) records.push_back(record_to_json(r));
  return Json{{"batch_id", b.batch_id},
              {"agent_id", b.agent_id},
              {"sent_at", b.sent_at},
              {"records", std::move(records)}};
}

Batch batch_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError(std::nullopt, "batch must be an object");
  Batch b;
  b.batch_id = require_string(j, "batch_id");
  if (b.batch_id.empty()) throw SchemaError(std::nullopt, "field 'batch_id' must be non-empty");
  b.agent_id = require_string(j, "agent_id");
  b.sent_at = require_int(j, "sent_at");
  const Json& records = require(j, "records");
  if (!records.is_array()) throw SchemaError(std::nullopt, "field 'records' must be an array");
  if (records.empty()) throw SchemaError(std::nullopt, "field 'records' must be non-empty");
  b.records.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      b.records.push_back(record_from_json(records[i]));
    } catch (const SchemaError& e) {
      throw SchemaError(i, "record " + std::to_string(i) + ": " + e.what());
    }
  }
  return b;
}

}  // namespace miniops
