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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "miniops/alerting/forecast.hpp"
#include "miniops/alerting/rule.hpp"
#include "miniops/tsstore/metadata_store.hpp"
#include "miniops/tsstore/store.hpp"

namespace miniops::alerting {

enum class AlertState { pending, firing, resolved };

const char* to_string(AlertState s);
AlertState parse_alert_state(std::string_view name);

struct AlertInstance {
  std::string instance_id;  // rule_id|group_key|first_breach_at
  std::string rule_id;
  std::string group_key;    // k=v pairs of the group-by tags, comma separated
  TagMap group;
  AlertState state = AlertState::pending;
  EpochMs first_breach_at = 0;
  std::optional<EpochMs> fired_at;
  std::optional<EpochMs> resolved_at;
  double last_value = 0.0;
  Severity severity = Severity::major;

  friend bool operator==(const AlertInstance&, const AlertInstance&) = default;
};

Json instance_to_json(const AlertInstance& a);
AlertInstance instance_from_json(const Json& j);

struct Transition {
  std::string rule_id;
  std::string group_key;
  std::optional<AlertState> from;  // nullopt: instance created
  AlertState to = AlertState::pending;
  EpochMs at = 0;
  double value = 0.0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

Json transition_to_json(const Transition& t);

/// Where rule sources are evaluated. Errors with Errc::unavailable skip the evaluation.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual tsstore::QueryResult query(const tsstore::Query& q) const = 0;
  // Raw points of the matching series inside [q.from, q.to), keyed by group values, oldest first.
  virtual std::map<std::vector<std::string>, std::vector<Sample>> samples(const tsstore::Query& q) const = 0;
};

class StoreSource final : public DataSource {
 public:
  explicit StoreSource(const tsstore::MetricStore& store) : store_(store) {}

  tsstore::QueryResult query(const tsstore::Query& q) const override;
  std::map<std::vector<std::string>, std::vector<Sample>> samples(const tsstore::Query& q) const override;

  void set_available(bool up) { available_ = up; }

 private:
  void check() const;

  const tsstore::MetricStore& store_;
  std::atomic<bool> available_{true};
};

struct IncidentRequest {
  std::string source_key;  // rule_id|group_key|fired_at, the idempotency key
  std::string rule_id;
  std::string title;
  std::string description;
  Severity severity = Severity::major;
  std::string team_hint;
  TagMap attributes;  // server, application, client, occurred_at
};

/// Receiver of alert side effects. Both calls must be idempotent on source_key:
/// the dispatcher retries until a call returns without throwing.
class ActionSink {
 public:
  virtual ~ActionSink() = default;
  virtual std::string create_incident(const IncidentRequest& req) = 0;
  virtual void alert_resolved(const std::string& source_key, EpochMs at) = 0;
};

struct DispatchStats {
  std::uint64_t delivered = 0;
  std::uint64_t failures = 0;
  std::uint64_t logged = 0;
};

/// Durable outbox of actions. An entry is written before any delivery attempt and
/// marked done after the sink acknowledges, so a crash between the two leads to a
/// retry with the same key, never a second distinct action.
class Dispatcher {
 public:
  Dispatcher(tsstore::MetadataStore& meta, ActionSink* sink);

  // false when an entry with this key already exists
  bool enqueue_incident(const IncidentRequest& req);
  bool enqueue_resolution(const std::string& source_key, EpochMs at);
  bool enqueue_log(const std::string& source_key, const std::string& text);

  // One delivery attempt per pending entry. Returns how many completed.
  std::size_t pump();

  std::size_t pending() const;
  std::vector<Json> outbox() const;
  std::optional<std::string> ticket_for(const std::string& source_key) const;
  DispatchStats stats() const;
  void set_sink(ActionSink* sink);

 private:
  bool enqueue(const std::string& key, Json entry);

  tsstore::MetadataStore& meta_;
  ActionSink* sink_;
  mutable std::mutex mu_;
  DispatchStats stats_;
};

struct EngineStats {
  std::uint64_t evaluations = 0;
  std::uint64_t skipped = 0;         // source unavailable
  std::uint64_t forecast_skips = 0;  // degenerate windows
  std::uint64_t fired = 0;
  std::uint64_t resolved = 0;
};

/// Threshold and forecast rule evaluator. Rules and instances live in the metadata
/// store (namespaces "rules" and "alerts"); at most one non-resolved instance per
/// (rule, group) exists at any time.
class AlertEngine {
 public:
  AlertEngine(tsstore::MetadataStore& meta, const DataSource& source, Dispatcher& dispatcher,
              const Clock& clock = system_clock(), std::unique_ptr<Forecaster> forecaster = nullptr);

  // Creates or replaces a rule.
  void put_rule(const AlertRule& rule);
  // Open instances of the rule are resolved. Error(not_found) if unknown.
  void delete_rule(const std::string& rule_id);
  std::optional<AlertRule> find_rule(const std::string& rule_id) const;
  std::vector<AlertRule> rules() const;

  // Evaluates one rule now. dry_run computes the transitions without applying them.
  std::vector<Transition> evaluate(const AlertRule& rule, EpochMs now, bool dry_run = false);

  // Evaluates every enabled rule whose eval_every_s boundary passed since its last
  // evaluation, then pumps the dispatcher.
  std::vector<Transition> tick(EpochMs now);

  std::vector<AlertInstance> instances(std::optional<AlertState> state = std::nullopt) const;
  EngineStats stats() const;

 private:
  using Active = std::map<std::pair<std::string, std::string>, AlertInstance>;
  struct Observation {
    TagMap group;
    double value;
  };

  std::map<std::string, Observation> observe(const AlertRule& rule, const tsstore::Query& q, EpochMs now);
  void apply(const AlertRule& rule, const std::string& metric, Active& active,
             const std::map<std::string, Observation>& obs, EpochMs now, bool commit,
             std::vector<Transition>& out);
  void fire(const AlertRule& rule, const std::string& metric, const AlertInstance& inst);
  void resolve(AlertInstance& inst, EpochMs now, bool commit, std::vector<Transition>& out);
  void persist(const AlertInstance& inst);

  tsstore::MetadataStore& meta_;
  const DataSource& source_;
  Dispatcher& dispatcher_;
  const Clock& clock_;
  std::unique_ptr<Forecaster> forecaster_;

  mutable std::shared_mutex rules_mu_;
  std::map<std::string, AlertRule> rules_;

  mutable std::mutex eval_mu_;  // one evaluator at a time; guards everything below
  Active active_;
  std::map<std::string, EpochMs> last_eval_;
  EngineStats stats_;
};

std::string source_key(const AlertInstance& inst);

}  // namespace miniops::alerting

namespace miniops::alerting {

Json incident_request_to_json(const IncidentRequest& r);
IncidentRequest incident_request_from_json(const Json& j);

// Posts to an incidents service: POST /v1/tickets and POST /v1/alert-resolutions.
class HttpActionSink final : public ActionSink {
 public:
  explicit HttpActionSink(std::string base_url, int timeout_ms = 5000);
  std::string create_incident(const IncidentRequest& req) override;
  void alert_resolved(const std::string& source_key, EpochMs at) override;

 private:
  std::string base_url_;
  int timeout_ms_;
};

}  // namespace miniops::alerting
