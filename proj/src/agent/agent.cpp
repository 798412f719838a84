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

#include "miniops/agent/agent.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <thread>

#include "miniops/common/error.hpp"

namespace miniops::agent {

namespace {

std::string random_boot_id() {
  std::random_device rd;
  const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

Agent::Agent(AgentOptions options, Transport& transport, ControlPlaneClient* controlplane, const Clock& clock,
             GeneratorRegistry generators)
    : options_(std::move(options)),
      transport_(transport),
      controlplane_(controlplane),
      clock_(clock),
      generators_(std::move(generators)),
      scheduler_(options_.agent_id),
      spool_(options_.spool_dir, options_.spool_capacity, options_.spool_sync) {
  if (options_.agent_id.empty()) throw Error(Errc::invalid_argument, "agent id must be non-empty");
  if (options_.info.server_id.empty()) options_.info.server_id = options_.agent_id;
  if (options_.boot_id.empty()) options_.boot_id = random_boot_id();
  ctx_ = RunContext{options_.info.server_id, options_.error_topic, &generators_};
}

Agent::~Agent() { wait_idle(); }

void Agent::register_self() {
  if (controlplane_) controlplane_->register_agent(options_.info);
}

ApplyResult Agent::poll_config() {
  if (!controlplane_) return {false, "no control plane"};
  const auto incoming = controlplane_->fetch_tasks(options_.agent_id);
  if (!incoming) return {false, "control plane unreachable"};
  return set_tasks(*incoming);
}

ApplyResult Agent::set_tasks(const TaskSet& incoming) {
  std::lock_guard lock(mu_);
  return apply_config(tasks_, incoming, scheduler_);
}

std::vector<std::string> Agent::tick(EpochMs now) {
  std::vector<CollectionTask> to_run;
  {
    std::lock_guard lock(mu_);
    const auto ids = scheduler_.due(tasks_.tasks, now);
    for (const auto& t : tasks_.tasks) {
      if (std::find(ids.begin(), ids.end(), t.task_id) == ids.end()) continue;
      scheduler_.mark_started(t.task_id, now);
      to_run.push_back(t);
    }
  }
  std::vector<std::string> started;
  for (auto& t : to_run) {
    started.push_back(t.task_id);
    if (options_.async_execution) {
      std::lock_guard lock(futures_mu_);
      running_.push_back(std::async(std::launch::async, [this, t] { execute(t); }));
    } else {
      execute(t);
    }
  }
  return started;
}

void Agent::execute(const CollectionTask& task) {
  TaskResult r = run_task(task, clock_, ctx_);
  std::lock_guard lock(mu_);
  ++stats_.executions;
  stats_.records_produced += r.records.size();
  std::move(r.records.begin(), r.records.end(), std::back_inserter(pending_));
  scheduler_.mark_finished(task.task_id);
  if (options_.report_executions && controlplane_) {
    execution_logs_.push_back(Json{{"task_id", r.task_id},
                                   {"server_id", r.server_id},
                                   {"started_at", r.started_at},
                                   {"duration_ms", r.duration_ms},
                                   {"outcome", to_string(r.outcome)}});
  }
}

void Agent::reap_finished() {
  std::lock_guard lock(futures_mu_);
  std::erase_if(running_, [](std::future<void>& f) {
    return f.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
  });
}

void Agent::wait_idle() {
  std::vector<std::future<void>> all;
  {
    std::lock_guard lock(futures_mu_);
    all.swap(running_);
  }
  for (auto& f : all) f.wait();
}

std::vector<AppendReport> Agent::seal(EpochMs now) {
  std::vector<Batch> batches;
  {
    std::lock_guard lock(mu_);
    last_seal_ = now;
    for (std::size_t i = 0; i < pending_.size(); i += options_.max_records_per_batch) {
      Batch b;
      char seq[24];
      std::snprintf(seq, sizeof seq, "%08llu", static_cast<unsigned long long>(batch_counter_++));
      b.batch_id = options_.agent_id + "-" + options_.boot_id + "-" + seq;
      b.agent_id = options_.agent_id;
      b.sent_at = now;
      const auto end = std::min(pending_.size(), i + options_.max_records_per_batch);
      b.records.assign(std::make_move_iterator(pending_.begin() + static_cast<std::ptrdiff_t>(i)),
                       std::make_move_iterator(pending_.begin() + static_cast<std::ptrdiff_t>(end)));
      batches.push_back(std::move(b));
    }
    pending_.clear();
    stats_.batches_sealed += batches.size();
  }
  std::vector<AppendReport> reports;
  for (const auto& b : batches) {
    AppendReport r = spool_.append(b);
    if (r.volatile_entry) std::fprintf(stderr, "agent %s: spool write failed, batch %s held in memory\n",
                                       options_.agent_id.c_str(), b.batch_id.c_str());
    {
      std::lock_guard lock(mu_);
      for (const auto& e : r.evicted) {
        ++stats_.batches_evicted;
        stats_.records_evicted += e.records.size();
        evicted_.push_back(e);
      }
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

DeliveryReport Agent::flush(EpochMs now) {
  std::lock_guard guard(flush_mu_);
  DeliveryReport report = flusher_.flush(spool_, transport_, now);
  std::lock_guard lock(mu_);
  stats_.batches_acked += report.acked.size();
  stats_.batches_rejected += report.rejected.size();
  return report;
}

void Agent::step(EpochMs now) {
  if (controlplane_ && (!last_config_poll_ || now - *last_config_poll_ >= options_.config_poll_ms)) {
    last_config_poll_ = now;
    try {
      poll_config();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "agent %s: config poll failed: %s\n", options_.agent_id.c_str(), e.what());
    }
  }
  tick(now);
  reap_finished();
  bool seal_due;
  {
    std::lock_guard lock(mu_);
    seal_due = !last_seal_ || now - *last_seal_ >= options_.batch_interval_ms;
  }
  if (seal_due) seal(now);
  flush(now);

  std::vector<Json> logs;
  {
    std::lock_guard lock(mu_);
    logs.swap(execution_logs_);
  }
  if (controlplane_) {
    for (const auto& l : logs) {
      try {
        controlplane_->record_execution(l);
      } catch (const std::exception&) {
        break;  // best effort; the control plane is optional for data delivery
      }
    }
  }
}

void Agent::run(const std::atomic<bool>& stop, EpochMs loop_ms) {
  while (!stop) {
    step(clock_.now_ms());
    std::this_thread::sleep_for(std::chrono::milliseconds(loop_ms));
  }
  wait_idle();
  seal(clock_.now_ms());
  flush(clock_.now_ms());
}

TaskSet Agent::tasks() const {
  std::lock_guard lock(mu_);
  return tasks_;
}

AgentStats Agent::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::vector<Batch> Agent::evicted_batches() const {
  std::lock_guard lock(mu_);
  return evicted_;
}

std::size_t Agent::pending_records() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

}  // namespace miniops::agent
