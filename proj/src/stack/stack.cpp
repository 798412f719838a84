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

#include "miniops/stack/stack.hpp"

#include "miniops/alerting/http_service.hpp"
#include "miniops/common/error.hpp"
#include "miniops/controlplane/http_service.hpp"
#include "miniops/incidents/http_service.hpp"
#include "miniops/ingester/http_service.hpp"
#include "miniops/mqueue/http_service.hpp"
#include "miniops/tsstore/http_service.hpp"

namespace miniops::stack {

namespace {

mqueue::BrokerOptions broker_options(const StackOptions& o) {
  auto b = o.broker;
  b.sync = o.sync;
  return b;
}

tsstore::StoreOptions metric_options(const StackOptions& o) {
  auto m = o.metrics;
  m.sync = o.sync;
  if (!o.volatile_stores) m.data_dir = o.data_dir / "metrics";
  return m;
}

tsstore::LogStoreOptions log_options(const StackOptions& o) {
  auto l = o.logs;
  l.sync = o.sync;
  if (!o.volatile_stores) l.data_dir = o.data_dir / "logs";
  return l;
}

}  // namespace

Stack::Stack(StackOptions options, const Clock& clock)
    : broker(options.data_dir / "queue", broker_options(options), clock),
      metrics(metric_options(options), clock),
      logs(log_options(options)),
      meta(options.data_dir / "meta.jsonl", options.sync),
      ingester(broker, options.ingester, clock),
      consumer(broker, metrics, logs, options.consumer),
      controlplane(meta, clock),
      source(metrics),
      incidents(meta, clock),
      ticket_sink(incidents),
      dispatcher(meta, &ticket_sink),
      alerts(meta, source, dispatcher, clock),
      panels(meta),
      options_(std::move(options)),
      clock_(clock) {}

Stack::~Stack() {
  stop_all();
  consumer.stop();
}

void Stack::serve(const std::string& host, const std::map<std::string, int>& ports) {
  for (const auto& name : kServices) {
    if (servers_.count(name)) continue;
    auto srv = std::make_shared<httplib::Server>();
    http::install_error_handler(*srv);
    if (name == "ingester") ingester::mount_routes(*srv, ingester);
    else if (name == "queue") mqueue::mount_routes(*srv, broker);
    else if (name == "store") {
      tsstore::mount_routes(*srv, metrics, logs);
      tsstore::mount_panel_routes(*srv, panels);
    }
    else if (name == "controlplane") controlplane::mount_routes(*srv, controlplane);
    else if (name == "alerting") alerting::mount_routes(*srv, alerts, dispatcher, clock_);
    else if (name == "incidents") incidents::mount_routes(*srv, incidents);
    if (name == "alerting" || name == "incidents") {
      srv->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        http::reply_json(res, 200, Json{{"status", "ok"}});
      });
    }
    auto it = ports.find(name);
    servers_[name] = std::make_unique<http::ServerThread>(srv, host, it == ports.end() ? 0 : it->second);
  }
}

void Stack::stop_service(const std::string& name) {
  auto it = servers_.find(name);
  if (it == servers_.end()) throw Error(Errc::not_found, "service '" + name + "' is not running");
  it->second->stop();
  servers_.erase(it);
}

void Stack::stop_all() {
  for (auto& [_, s] : servers_) s->stop();
  servers_.clear();
}

std::map<std::string, std::string> Stack::urls() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, s] : servers_) out[name] = s->endpoint().url();
  return out;
}

std::string Stack::url(const std::string& name) const {
  auto it = servers_.find(name);
  if (it == servers_.end()) throw Error(Errc::not_found, "service '" + name + "' is not running");
  return it->second->endpoint().url();
}

}  // namespace miniops::stack
