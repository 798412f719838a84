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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "miniops/agent/task.hpp"
#include "miniops/common/clock.hpp"

namespace miniops::agent {

// Fixed per-task offset in ms: FNV-1a of (agent_id, task_id) mod jitter_seconds, in seconds.
EpochMs jitter_offset_ms(const std::string& agent_id, const CollectionTask& task);

/// Fire bookkeeping. A task is due iff it has never fired, or
/// now >= last_fire + period + jitter offset, and it is not currently running.
class Scheduler {
 public:
  explicit Scheduler(std::string agent_id) : agent_id_(std::move(agent_id)) {}

  std::vector<std::string> due(const std::vector<CollectionTask>& tasks, EpochMs now) const;
  std::optional<EpochMs> next_due(const CollectionTask& task) const;  // nullopt: due on the next tick

  void mark_started(const std::string& task_id, EpochMs now);
  void mark_finished(const std::string& task_id);
  bool running(const std::string& task_id) const;
  std::optional<EpochMs> last_fire(const std::string& task_id) const;

  // Forgets tasks not in keep, except ones still running.
  void retain(const std::vector<CollectionTask>& keep);

 private:
  struct State {
    std::optional<EpochMs> last_fire;
    bool running = false;
  };
  std::string agent_id_;
  std::map<std::string, State> state_;
};

struct ApplyResult {
  bool applied = false;
  std::string reason;  // set when not applied
};

// Replaces current with incoming iff incoming.version > current.version, keeping the
// scheduler state of task ids present in both.
ApplyResult apply_config(TaskSet& current, const TaskSet& incoming, Scheduler& scheduler);

}  // namespace miniops::agent
