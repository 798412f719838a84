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

#include <limits>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "miniops/agent/task.hpp"
#include "miniops/controlplane/selector.hpp"
#include "miniops/tsstore/metadata_store.hpp"

namespace miniops::controlplane {

struct TaskTemplate {
  std::string template_id;
  agent::CollectionTask task;  // task_id is replaced by template_id when planned
  TargetSelector selector;
  bool enabled = true;
  EpochMs created_at = 0;
  EpochMs updated_at = 0;
};

Json template_to_json(const TaskTemplate& t);
TaskTemplate template_from_json(const Json& j);

struct ExecutionLog {
  std::string task_id;
  std::string server_id;
  EpochMs started_at = 0;
  std::string outcome;
  std::int64_t duration_ms = 0;

  friend bool operator==(const ExecutionLog&, const ExecutionLog&) = default;
};

Json execution_to_json(const ExecutionLog& e);
ExecutionLog execution_from_json(const Json& j);

struct ExecutionQuery {
  std::optional<std::string> task_id;
  std::optional<std::string> server_id;
  EpochMs from = std::numeric_limits<EpochMs>::min();
  EpochMs to = std::numeric_limits<EpochMs>::max();  // exclusive
};

struct AgentRecord {
  ServerDescriptor descriptor;
  std::int64_t version = 1;
};

struct RegisterAck {
  std::int64_t version = 0;
  bool version_bumped = false;
};

/// Fleet registry and task planning. Every mutation goes through one writer lock and
/// is journaled in the metadata store before it returns.
class ControlPlane {
 public:
  ControlPlane(tsstore::MetadataStore& meta, const Clock& clock = system_clock());

  // Upserts; a known agent's version increases iff its set of matching enabled
  // templates changed. New agents start at version 1.
  RegisterAck register_agent(const ServerDescriptor& desc);

  // Stores the template enabled and bumps every matching agent. Re-planning a
  // disabled template replaces and re-enables it. Returns the affected agent count.
  std::size_t plan_task(TaskTemplate tmpl);
  // Disables; throws not_found for an unknown id, conflict if already disabled.
  std::size_t unplan_task(const std::string& template_id);

  std::vector<std::string> resolve_targets(const TargetSelector& selector) const;
  agent::TaskSet compile_config(const std::string& agent_id) const;  // throws not_found

  void record_execution(const ExecutionLog& log);
  std::vector<ExecutionLog> query_executions(const ExecutionQuery& q) const;

  std::vector<AgentRecord> agents() const;
  std::vector<TaskTemplate> templates() const;
  std::optional<TaskTemplate> find_template(const std::string& id) const;

 private:
  std::vector<std::string> membership_locked(const ServerDescriptor& d) const;
  void bump_locked(const TargetSelector& selector);
  void save_agent_locked(const AgentRecord& a);
  void save_template_locked(const TaskTemplate& t);

  tsstore::MetadataStore& meta_;
  const Clock& clock_;
  mutable std::shared_mutex mu_;
  std::map<std::string, AgentRecord> agents_;
  std::map<std::string, TaskTemplate> templates_;
  std::vector<ExecutionLog> executions_;
};

}  // namespace miniops::controlplane
