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
#include <limits>
#include <optional>
#include <string>

#include "miniops/agent/spool.hpp"
#include "miniops/agent/task.hpp"
#include "miniops/common/clock.hpp"
#include "miniops/common/http.hpp"

namespace miniops::agent {

enum class SendStatus { acked, rejected, failed };

struct SendResult {
  SendStatus status = SendStatus::failed;
  std::string acked_id;  // for acked
  std::string detail;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual SendResult send(const Batch& batch) = 0;
};

/// POST {ingester}/v1/batch, gzip-compressed JSON.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const std::string& ingester_url, std::int64_t timeout_ms = 5000);
  SendResult send(const Batch& batch) override;

 private:
  http::Endpoint endpoint_;
  std::int64_t timeout_ms_;
};

struct BackoffPolicy {
  EpochMs base_ms = 1000;
  double factor = 2.0;
  EpochMs cap_ms = 60'000;

  EpochMs delay(std::uint32_t consecutive_failures) const;  // failures >= 1
};

struct DeliveryReport {
  std::vector<std::string> acked;     // in delivery order
  std::vector<std::string> rejected;  // dropped after a permanent 400
  bool failed = false;                // stopped on a transient failure
  bool deferred = false;              // still backing off, nothing attempted
};

/// Sends spooled batches oldest first. A batch leaves the spool only when the reply
/// acknowledges its id; a transient failure stops the pass and schedules a retry.
class Flusher {
 public:
  explicit Flusher(BackoffPolicy policy = {}) : policy_(policy) {}

  DeliveryReport flush(Spool& spool, Transport& transport, EpochMs now, std::size_t max_batches = SIZE_MAX);

  EpochMs next_attempt_at() const { return next_attempt_at_; }
  std::uint32_t consecutive_failures() const { return failures_; }

 private:
  BackoffPolicy policy_;
  std::uint32_t failures_ = 0;
  EpochMs next_attempt_at_ = std::numeric_limits<EpochMs>::min();
};

struct ServerInfo {
  std::string server_id;
  std::string client_name;
  std::string role;
  TagMap tags;
};

/// Agent-side view of the control plane.
class ControlPlaneClient {
 public:
  virtual ~ControlPlaneClient() = default;
  virtual void register_agent(const ServerInfo& info) = 0;
  virtual std::optional<TaskSet> fetch_tasks(const std::string& agent_id) = 0;
  virtual void record_execution(const Json& log) = 0;
};

class HttpControlPlaneClient : public ControlPlaneClient {
 public:
  explicit HttpControlPlaneClient(const std::string& url, std::int64_t timeout_ms = 5000);
  void register_agent(const ServerInfo& info) override;
  std::optional<TaskSet> fetch_tasks(const std::string& agent_id) override;
  void record_execution(const Json& log) override;

 private:
  http::Endpoint endpoint_;
  std::int64_t timeout_ms_;
};

}  // namespace miniops::agent
