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

#include "miniops/agent/scheduler.hpp"

#include <set>

namespace miniops::agent {

namespace {

std::uint64_t fnv1a(std::string_view a, std::string_view b) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  mix(a);
  mix(std::string_view("\0", 1));
  mix(b);
  return h;
}

}  // namespace

EpochMs jitter_offset_ms(const std::string& agent_id, const CollectionTask& task) {
  if (task.jitter_seconds <= 0) return 0;
  const auto j = static_cast<std::uint64_t>(task.jitter_seconds);
  return static_cast<EpochMs>(fnv1a(agent_id, task.task_id) % j) * kMsPerSecond;
}

std::optional<EpochMs> Scheduler::next_due(const CollectionTask& task) const {
  auto it = state_.find(task.task_id);
  if (it == state_.end() || !it->second.last_fire) return std::nullopt;
  return *it->second.last_fire + task.period_seconds * kMsPerSecond + jitter_offset_ms(agent_id_, task);
}

std::vector<std::string> Scheduler::due(const std::vector<CollectionTask>& tasks, EpochMs now) const {
  std::vector<std::string> out;
  for (const auto& t : tasks) {
    if (running(t.task_id)) continue;
    const auto next = next_due(t);
    if (!next || now >= *next) out.push_back(t.task_id);
  }
  return out;
}

void Scheduler::mark_started(const std::string& task_id, EpochMs now) {
  State& s = state_[task_id];
  s.last_fire = now;
  s.running = true;
}

void Scheduler::mark_finished(const std::string& task_id) {
  if (auto it = state_.find(task_id); it != state_.end()) it->second.running = false;
}

bool Scheduler::running(const std::string& task_id) const {
  auto it = state_.find(task_id);
  return it != state_.end() && it->second.running;
}

std::optional<EpochMs> Scheduler::last_fire(const std::string& task_id) const {
  auto it = state_.find(task_id);
  return it == state_.end() ? std::nullopt : it->second.last_fire;
}

void Scheduler::retain(const std::vector<CollectionTask>& keep) {
  std::set<std::string> ids;
  for (const auto& t : keep) ids.insert(t.task_id);
  std::erase_if(state_, [&](const auto& kv) { return !ids.contains(kv.first) && !kv.second.running; });
}

ApplyResult apply_config(TaskSet& current, const TaskSet& incoming, Scheduler& scheduler) {
  if (incoming.version <= current.version) {
    return {false, "stale version " + std::to_string(incoming.version) + " (current " +
                       std::to_string(current.version) + ")"};
  }
  for (const auto& t : incoming.tasks) validate(t);
  current = incoming;
  scheduler.retain(current.tasks);
  return {true, {}};
}

}  // namespace miniops::agent
