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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "miniops/alerting/engine.hpp"
#include "miniops/common/http.hpp"
#include "miniops/controlplane/controlplane.hpp"
#include "miniops/incidents/service.hpp"
#include "miniops/ingester/ingester.hpp"
#include "miniops/mqueue/broker.hpp"
#include "miniops/pipeline/store_consumer.hpp"
#include "miniops/tsstore/log_store.hpp"
#include "miniops/tsstore/metadata_store.hpp"
#include "miniops/tsstore/panels.hpp"
#include "miniops/tsstore/store.hpp"

namespace miniops::stack {

struct StackOptions {
  std::filesystem::path data_dir;  // queue/, metrics/, logs/, meta.jsonl
  // fsync on every durable write; tests and the simulator turn it off for speed
  bool sync = true;
  // Keep metrics and logs in memory only (the queue and metadata stay on disk).
  bool volatile_stores = false;
  mqueue::BrokerOptions broker;
  tsstore::StoreOptions metrics;
  tsstore::LogStoreOptions logs;
  ingester::IngesterOptions ingester;
  pipeline::ConsumerOptions consumer;
};

// Service names used for HTTP endpoints and gateway upstreams.
inline const std::vector<std::string> kServices = {"ingester", "queue", "store", "controlplane", "alerting",
                                                   "incidents"};

/// Every backend service of one node, wired together in process: the ingester
/// publishes to the broker, the store consumer moves records into the stores, the
/// alert engine reads the metric store and files tickets through the incident service.
class Stack {
 public:
  Stack(StackOptions options, const Clock& clock = system_clock());
  ~Stack();

  Stack(const Stack&) = delete;
  Stack& operator=(const Stack&) = delete;

  // One HTTP server per service on host, ephemeral ports unless given.
  void serve(const std::string& host = "127.0.0.1", const std::map<std::string, int>& ports = {});
  void stop_service(const std::string& name);
  void stop_all();
  std::map<std::string, std::string> urls() const;  // running services only
  std::string url(const std::string& name) const;

  const Clock& clock() const { return clock_; }
  const StackOptions& options() const { return options_; }

  mqueue::Broker broker;
  tsstore::MetricStore metrics;
  tsstore::LogStore logs;
  tsstore::MetadataStore meta;
  ingester::Ingester ingester;
  pipeline::StoreConsumer consumer;
  controlplane::ControlPlane controlplane;
  alerting::StoreSource source;
  incidents::IncidentService incidents;
  incidents::TicketActionSink ticket_sink;
  alerting::Dispatcher dispatcher;
  alerting::AlertEngine alerts;
  tsstore::PanelStore panels;

 private:
  StackOptions options_;
  const Clock& clock_;
  std::map<std::string, std::unique_ptr<http::ServerThread>> servers_;
};

}  // namespace miniops::stack
