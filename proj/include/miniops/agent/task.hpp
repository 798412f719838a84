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
#include <variant>
#include <vector>

#include "miniops/common/json.hpp"
#include "miniops/common/record.hpp"

namespace miniops::agent {

enum class TaskKind { exec, http_probe, builtin_metric };
enum class ParseMode { scalar, lines, raw };

const char* to_string(TaskKind k);
const char* to_string(ParseMode m);

struct ExecSpec {
  std::string command;  // run with /bin/sh -c
  ParseMode parse = ParseMode::scalar;
  friend bool operator==(const ExecSpec&, const ExecSpec&) = default;
};

struct HttpProbeSpec {
  std::string url;
  std::string method = "GET";  // GET or HEAD
  std::int64_t timeout_ms = 2000;
  friend bool operator==(const HttpProbeSpec&, const HttpProbeSpec&) = default;
};

struct BuiltinSpec {
  std::string generator;  // cpu_load, mem_free_bytes, disk_free_bytes, proc_count, or a registered one
  friend bool operator==(const BuiltinSpec&, const BuiltinSpec&) = default;
};

struct CollectionTask {
  std::string task_id;
  std::variant<ExecSpec, HttpProbeSpec, BuiltinSpec> spec;
  std::string name;  // metric name or log source; defaults to task_id
  std::int64_t period_seconds = 60;
  std::int64_t jitter_seconds = 0;
  std::int64_t timeout_ms = 10'000;
  std::string output_topic = "metrics";
  RecordKind output_kind = RecordKind::metric;

  TaskKind kind() const { return static_cast<TaskKind>(spec.index()); }
  const std::string& metric_name() const { return name.empty() ? task_id : name; }

  friend bool operator==(const CollectionTask&, const CollectionTask&) = default;
};

// Throws Error(invalid_argument) naming the first violated constraint.
void validate(const CollectionTask& t);

// {"task_id", "kind", "spec": {...}, "name", "schedule": {"period_seconds", "jitter_seconds"},
//  "timeout_ms", "output_topic", "output_kind"}
Json task_to_json(const CollectionTask& t);
CollectionTask task_from_json(const Json& j);  // validates

/// A versioned task set as served by the control plane.
struct TaskSet {
  std::int64_t version = 0;
  std::vector<CollectionTask> tasks;
  friend bool operator==(const TaskSet&, const TaskSet&) = default;
};

Json task_set_to_json(const TaskSet& s);
TaskSet task_set_from_json(const Json& j);

}  // namespace miniops::agent
