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

#include <atomic>
#include <filesystem>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "miniops/agent/runner.hpp"
#include "miniops/agent/scheduler.hpp"
#include "miniops/agent/spool.hpp"
#include "miniops/agent/transport.hpp"

namespace miniops::agent {

struct AgentOptions {
  std::string agent_id;
  ServerInfo info;  // server_id defaults to agent_id
  std::optional<std::filesystem::path> spool_dir;
  std::size_t spool_capacity = 1000;
  bool spool_sync = true;
  EpochMs batch_interval_ms = 10'000;   // how long records accumulate before a batch is sealed
  EpochMs config_poll_ms = 60'000;
  std::size_t max_records_per_batch = 5000;
  std::string error_topic = "logs";
  std::string boot_id;                  // part of every batch id; random when empty
  bool async_execution = true;          // false: tasks run inline on tick()
  bool report_executions = true;
};

struct AgentStats {
  std::uint64_t executions = 0;
  std::uint64_t records_produced = 0;
  std::uint64_t batches_sealed = 0;
  std::uint64_t batches_acked = 0;
  std::uint64_t batches_rejected = 0;
  std::uint64_t batches_evicted = 0;
  std::uint64_t records_evicted = 0;
};

/// One monitored server's collector: schedules tasks, batches their records into the
/// spool and drains the spool to the ingester.
class Agent {
 public:
  Agent(AgentOptions options, Transport& transport, ControlPlaneClient* controlplane,
        const Clock& clock = system_clock(), GeneratorRegistry generators = {});
  ~Agent();

  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  void register_self();
  ApplyResult poll_config();
  ApplyResult set_tasks(const TaskSet& incoming);

  // Starts every due task. Returns the ids started.
  std::vector<std::string> tick(EpochMs now);
  // Packs pending records into batches (at most max_records_per_batch each).
  std::vector<AppendReport> seal(EpochMs now);
  DeliveryReport flush(EpochMs now);

  // tick, then seal and flush when the batch interval elapsed, polling config when due.
  void step(EpochMs now);
  // Runs step() against the clock until stop is set.
  void run(const std::atomic<bool>& stop, EpochMs loop_ms = 100);

  // Waits for in-flight task executions.
  void wait_idle();

  const std::string& agent_id() const { return options_.agent_id; }
  TaskSet tasks() const;
  Spool& spool() { return spool_; }
  const Flusher& flusher() const { return flusher_; }
  AgentStats stats() const;
  std::vector<Batch> evicted_batches() const;
  std::size_t pending_records() const;

 private:
  void execute(const CollectionTask& task);
  void reap_finished();

  AgentOptions options_;
  Transport& transport_;
  ControlPlaneClient* controlplane_;
  const Clock& clock_;
  GeneratorRegistry generators_;
  RunContext ctx_;

  mutable std::mutex mu_;  // tasks, scheduler, pending records, stats
  TaskSet tasks_;
  Scheduler scheduler_;
  std::vector<Record> pending_;
  std::vector<Json> execution_logs_;
  AgentStats stats_;
  std::vector<Batch> evicted_;
  std::uint64_t batch_counter_ = 0;
  std::optional<EpochMs> last_seal_;
  std::optional<EpochMs> last_config_poll_;

  Spool spool_;
  std::mutex flush_mu_;
  Flusher flusher_;

  std::mutex futures_mu_;
  std::vector<std::future<void>> running_;
};

}  // namespace miniops::agent
