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

#include "miniops/agent/transport.hpp"

#include <algorithm>
#include <cmath>

#include "miniops/common/codec.hpp"

namespace miniops::agent {

namespace {

httplib::Client make_client(const http::Endpoint& ep, std::int64_t timeout_ms) {
  httplib::Client cli(ep.host, ep.port);
  const auto t = std::chrono::milliseconds(timeout_ms);
  cli.set_connection_timeout(t);
  cli.set_read_timeout(t);
  cli.set_write_timeout(t);
  return cli;
}

std::string describe(const httplib::Result& res) {
  if (!res) return "transport error: " + httplib::to_string(res.error());
  return "HTTP " + std::to_string(res->status) + ": " + res->body;
}

}  // namespace

HttpTransport::HttpTransport(const std::string& ingester_url, std::int64_t timeout_ms)
    : endpoint_(http::parse_url(ingester_url)), timeout_ms_(timeout_ms) {}

SendResult HttpTransport::send(const Batch& batch) {
  auto cli = make_client(endpoint_, timeout_ms_);
  const std::string body = gzip_compress(batch_to_json(batch).dump());
  auto res = cli.Post("/v1/batch", httplib::Headers{{"Content-Encoding", "gzip"}}, body, "application/json");
  SendResult out;
  out.detail = describe(res);
  if (!res) return out;
  if (res->status == 200) {
    try {
      out.acked_id = Json::parse(res->body).at("acked").get<std::string>();
      out.status = SendStatus::acked;
    } catch (const Json::exception&) {
      out.status = SendStatus::failed;
    }
  } else if (res->status == 400) {
    out.status = SendStatus::rejected;
  }
  return out;
}

EpochMs BackoffPolicy::delay(std::uint32_t consecutive_failures) const {
  const double d = static_cast<double>(base_ms) * std::pow(factor, std::max<std::uint32_t>(consecutive_failures, 1) - 1);
  return d >= static_cast<double>(cap_ms) ? cap_ms : static_cast<EpochMs>(d);
}

DeliveryReport Flusher::flush(Spool& spool, Transport& transport, EpochMs now, std::size_t max_batches) {
  DeliveryReport report;
  if (now < next_attempt_at_) {
    report.deferred = true;
    return report;
  }
  for (std::size_t sent = 0; sent < max_batches; ++sent) {
    const auto batch = spool.front();
    if (!batch) break;
    const SendResult r = transport.send(*batch);
    if (r.status == SendStatus::acked && r.acked_id == batch->batch_id) {
      spool.remove(batch->batch_id);
      report.acked.push_back(batch->batch_id);
      failures_ = 0;
      continue;
    }
    if (r.status == SendStatus::rejected) {
      // The ingester will never accept this batch; holding it would block the spool forever.
      spool.remove(batch->batch_id);
      report.rejected.push_back(batch->batch_id);
      continue;
    }
    ++failures_;
    next_attempt_at_ = now + policy_.delay(failures_);
    report.failed = true;
    break;
  }
  return report;
}

HttpControlPlaneClient::HttpControlPlaneClient(const std::string& url, std::int64_t timeout_ms)
    : endpoint_(http::parse_url(url)), timeout_ms_(timeout_ms) {}

void HttpControlPlaneClient::register_agent(const ServerInfo& info) {
  auto cli = make_client(endpoint_, timeout_ms_);
  const Json body{{"server_id", info.server_id}, {"client_name", info.client_name}, {"role", info.role}, {"tags", info.tags}};
  auto res = cli.Post("/v1/agents", body.dump(), "application/json");
  if (!res || res->status != 200) throw Error(Errc::unavailable, "register failed: " + describe(res));
}

std::optional<TaskSet> HttpControlPlaneClient::fetch_tasks(const std::string& agent_id) {
  auto cli = make_client(endpoint_, timeout_ms_);
  auto res = cli.Get("/v1/agents/" + agent_id + "/tasks");
  if (!res || res->status != 200) return std::nullopt;
  return task_set_from_json(Json::parse(res->body));
}

void HttpControlPlaneClient::record_execution(const Json& log) {
  auto cli = make_client(endpoint_, timeout_ms_);
  auto res = cli.Post("/v1/executions", log.dump(), "application/json");
  if (!res || res->status != 200) throw Error(Errc::unavailable, "execution report failed: " + describe(res));
}

}  // namespace miniops::agent
