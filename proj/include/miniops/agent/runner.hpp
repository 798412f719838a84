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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "miniops/agent/task.hpp"
#include "miniops/common/clock.hpp"

namespace miniops::agent {

enum class Outcome { ok, timeout, exec_error };
const char* to_string(Outcome o);

struct TaskResult {
  std::string task_id;
  std::string server_id;
  EpochMs started_at = 0;
  std::int64_t duration_ms = 0;
  Outcome outcome = Outcome::ok;
  std::vector<Record> records;
};

// Value source for builtin_metric tasks.
using Generator = std::function<double(EpochMs now)>;

/// Host generators (cpu_load, mem_free_bytes, disk_free_bytes, proc_count) plus any
/// registered extras, which take precedence.
class GeneratorRegistry {
 public:
  GeneratorRegistry();
  void add(const std::string& name, Generator g);
  bool contains(const std::string& name) const;
  double sample(const std::string& name, EpochMs now) const;  // throws Error(not_found)

 private:
  std::map<std::string, Generator> generators_;
};

struct RunContext {
  std::string server_id;
  std::string error_topic = "logs";  // where exec_error log events go
  const GeneratorRegistry* generators = nullptr;
};

// Parses command output per mode into records stamped (server, ts). Throws
// Error(invalid_argument) on a parse failure.
std::vector<Record> parse_output(const CollectionTask& task, const std::string& output, const std::string& server,
                                 EpochMs ts);

TaskResult run_task(const CollectionTask& task, const Clock& clock, const RunContext& ctx);

}  // namespace miniops::agent
