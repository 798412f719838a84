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

#include "miniops/controlplane/controlplane.hpp"

#include <algorithm>
#include <cstdio>
#include <mutex>

#include "miniops/common/error.hpp"

namespace miniops::controlplane {

Json template_to_json(const TaskTemplate& t) {
  return {{"template_id", t.template_id}, {"task", agent::task_to_json(t.task)}, {"selector", selector_to_json(t.selector)},
          {"enabled", t.enabled}, {"created_at", t.created_at}, {"updated_at", t.updated_at}};
}

TaskTemplate template_from_json(const Json& j) {
  TaskTemplate t;
  try {
    t.template_id = j.at("template_id").get<std::string>();
    Json task = j.at("task");
    if (task.is_object() && !task.contains("task_id")) task["task_id"] = t.template_id;
    t.task = agent::task_from_json(task);
    t.selector = selector_from_json(j.value("selector", Json::array()));
    t.enabled = j.value("enabled", true);
    t.created_at = j.value("created_at", EpochMs{0});
    t.updated_at = j.value("updated_at", EpochMs{0});
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed template: ") + e.what());
  }
  if (t.template_id.empty()) throw Error(Errc::invalid_argument, "template_id must be non-empty");
  return t;
}

Json execution_to_json(const ExecutionLog& e) {
  return {{"task_id", e.task_id}, {"server_id", e.server_id}, {"started_at", e.started_at}, {"outcome", e.outcome},
          {"duration_ms", e.duration_ms}};
}

ExecutionLog execution_from_json(const Json& j) {
  try {
    return {j.at("task_id").get<std::string>(), j.at("server_id").get<std::string>(), j.at("started_at").get<EpochMs>(),
            j.at("outcome").get<std::string>(), j.value("duration_ms", std::int64_t{0})};
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed execution log: ") + e.what());
  }
}

namespace {

constexpr const char* kAgents = "agents";
constexpr const char* kTemplates = "templates";
constexpr const char* kExecutions = "executions";

std::string seq_key(std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016zu", n);
  return buf;
}

}  // namespace

ControlPlane::ControlPlane(tsstore::MetadataStore& meta, const Clock& clock) : meta_(meta), clock_(clock) {
  for (const auto& [id, j] : meta_.list(kAgents)) {
    agents_[id] = AgentRecord{descriptor_from_json(j.at("descriptor")), j.at("version").get<std::int64_t>()};
  }
  for (const auto& [id, j] : meta_.list(kTemplates)) templates_[id] = template_from_json(j);
  for (const auto& [_, j] : meta_.list(kExecutions)) executions_.push_back(execution_from_json(j));
}

std::vector<std::string> ControlPlane::membership_locked(const ServerDescriptor& d) const {
  std::vector<std::string> ids;
  for (const auto& [id, t] : templates_) {
    if (t.enabled && matches(t.selector, d)) ids.push_back(id);
  }
  return ids;
}

void ControlPlane::save_agent_locked(const AgentRecord& a) {
  meta_.put(kAgents, a.descriptor.server_id, Json{{"descriptor", descriptor_to_json(a.descriptor)}, {"version", a.version}});
}

void ControlPlane::save_template_locked(const TaskTemplate& t) { meta_.put(kTemplates, t.template_id, template_to_json(t)); }

void ControlPlane::bump_locked(const TargetSelector& selector) {
  for (auto& [id, a] : agents_) {
    if (!matches(selector, a.descriptor)) continue;
    ++a.version;
    save_agent_locked(a);
  }
}

RegisterAck ControlPlane::register_agent(const ServerDescriptor& desc) {
  if (desc.server_id.empty()) throw Error(Errc::invalid_argument, "server_id must be non-empty");
  if (desc.role.empty()) throw Error(Errc::invalid_argument, "role must be non-empty");
  std::unique_lock lock(mu_);
  ServerDescriptor d = desc;
  d.last_seen = clock_.now_ms();
  RegisterAck ack;
  auto it = agents_.find(d.server_id);
  if (it == agents_.end()) {
    AgentRecord rec{d, 1};
    save_agent_locked(rec);
    agents_.emplace(d.server_id, rec);
    ack.version = 1;
    return ack;
  }
  AgentRecord& rec = it->second;
  const bool changed = membership_locked(rec.descriptor) != membership_locked(d);
  AgentRecord next{d, rec.version + (changed ? 1 : 0)};
  save_agent_locked(next);
  rec = next;
  ack.version = rec.version;
  ack.version_bumped = changed;
  return ack;
}

std::size_t ControlPlane::plan_task(TaskTemplate tmpl) {
  if (tmpl.template_id.empty()) throw Error(Errc::invalid_argument, "template_id must be non-empty");
  validate(tmpl.selector);
  tmpl.task.task_id = tmpl.template_id;
  agent::validate(tmpl.task);
  std::unique_lock lock(mu_);
  const EpochMs now = clock_.now_ms();
  auto it = templates_.find(tmpl.template_id);
  if (it != templates_.end() && it->second.enabled) {
    throw Error(Errc::already_exists, "template '" + tmpl.template_id + "' is already planned");
  }
  tmpl.enabled = true;
  tmpl.created_at = it == templates_.end() ? now : it->second.created_at;
  tmpl.updated_at = now;
  save_template_locked(tmpl);
  // A re-plan can change the selector: agents matching the old one saw no task, so
  // only the new selector's members need a bump.
  bump_locked(tmpl.selector);
  templates_[tmpl.template_id] = tmpl;
  std::size_t affected = 0;
  for (const auto& [id, a] : agents_) affected += matches(tmpl.selector, a.descriptor) ? 1 : 0;
  return affected;
}

std::size_t ControlPlane::unplan_task(const std::string& template_id) {
  std::unique_lock lock(mu_);
  auto it = templates_.find(template_id);
  if (it == templates_.end()) throw Error(Errc::not_found, "unknown template '" + template_id + "'");
  if (!it->second.enabled) throw Error(Errc::conflict, "template '" + template_id + "' is already disabled");
  TaskTemplate t = it->second;
  t.enabled = false;
  t.updated_at = clock_.now_ms();
  save_template_locked(t);
  it->second = t;
  bump_locked(t.selector);
  std::size_t affected = 0;
  for (const auto& [id, a] : agents_) affected += matches(t.selector, a.descriptor) ? 1 : 0;
  return affected;
}

std::vector<std::string> ControlPlane::resolve_targets(const TargetSelector& selector) const {
  validate(selector);
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, a] : agents_) {
    if (matches(selector, a.descriptor)) out.push_back(id);
  }
  return out;
}

agent::TaskSet ControlPlane::compile_config(const std::string& agent_id) const {
  std::shared_lock lock(mu_);
  auto it = agents_.find(agent_id);
  if (it == agents_.end()) throw Error(Errc::not_found, "unknown agent '" + agent_id + "'");
  agent::TaskSet set;
  set.version = it->second.version;
  for (const auto& id : membership_locked(it->second.descriptor)) set.tasks.push_back(templates_.at(id).task);
  return set;
}

void ControlPlane::record_execution(const ExecutionLog& log) {
  std::unique_lock lock(mu_);
  meta_.put(kExecutions, seq_key(executions_.size()), execution_to_json(log));
  executions_.push_back(log);
}

std::vector<ExecutionLog> ControlPlane::query_executions(const ExecutionQuery& q) const {
  std::shared_lock lock(mu_);
  std::vector<ExecutionLog> out;
  for (const auto& e : executions_) {
    if (q.task_id && e.task_id != *q.task_id) continue;
    if (q.server_id && e.server_id != *q.server_id) continue;
    if (e.started_at < q.from || e.started_at >= q.to) continue;
    out.push_back(e);
  }
  return out;
}

std::vector<AgentRecord> ControlPlane::agents() const {
  std::shared_lock lock(mu_);
  std::vector<AgentRecord> out;
  for (const auto& [_, a] : agents_) out.push_back(a);
  return out;
}

std::vector<TaskTemplate> ControlPlane::templates() const {
  std::shared_lock lock(mu_);
  std::vector<TaskTemplate> out;
  for (const auto& [_, t] : templates_) out.push_back(t);
  return out;
}

std::optional<TaskTemplate> ControlPlane::find_template(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = templates_.find(id);
  if (it == templates_.end()) return std::nullopt;
  return it->second;
}

}  // namespace miniops::controlplane
