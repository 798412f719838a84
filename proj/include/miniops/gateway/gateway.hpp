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
#include <vector>

#include "miniops/common/http.hpp"
#include "miniops/common/json.hpp"

namespace miniops::gateway {

struct GatewayConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::map<std::string, std::string> upstreams;  // service name -> base url
  std::string token;                             // required; guards every mutating route
  std::vector<std::string> cors_origins;
  std::optional<std::filesystem::path> static_dir;  // console assets served at /
  int upstream_timeout_ms = 10'000;
  int health_timeout_ms = 1'000;
};

// "host:port" from MINIOPS_GATEWAY_ADDR, the token from MINIOPS_TOKEN.
void apply_env(GatewayConfig& config);

struct Route {
  std::string method;
  std::string path;      // as exposed, e.g. /api/tickets/{id}
  std::string upstream;  // service name, or "gateway" for local routes
  bool mutating = false;
  std::string summary;
};

const std::vector<Route>& routes();
Json routes_json();
std::string routes_markdown();

// Service owning /api/<first segment>..., empty when nothing does.
std::string upstream_for(const std::string& api_path);
bool is_mutation(const std::string& method, const std::string& api_path);

/// Stateless facade: every /api/... request is forwarded to the owning service
/// at /v1/..., with status and body passed through unchanged.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config);  // Error(invalid_argument) without a token
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void mount(httplib::Server& server);
  // Binds config.host:config.port (0 = ephemeral) on a background thread.
  void start();
  void stop();
  std::string url() const;

  // {status, subsystems: {name: up|down}, queue_lag: {topic: {group: lag}}, store_partitions}
  Json health() const;

  const GatewayConfig& config() const { return config_; }

 private:
  void proxy(const httplib::Request& req, httplib::Response& res);
  bool authorized(const httplib::Request& req) const;

  GatewayConfig config_;
  std::unique_ptr<http::ServerThread> server_;
};

}  // namespace miniops::gateway
