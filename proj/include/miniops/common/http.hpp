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

#include <memory>
#include <string>
#include <thread>

#include <httplib.h>

#include "miniops/common/error.hpp"
#include "miniops/common/json.hpp"

namespace miniops::http {

struct Endpoint {
  std::string host;
  int port = 0;

  std::string url() const { return "http://" + host + ":" + std::to_string(port); }
};

// Accepts "http://host:port[/...]" or "host:port".
Endpoint parse_url(const std::string& url);

void reply_json(httplib::Response& res, int status, const Json& body);

// {"error": what}, status from the error class.
void reply_error(httplib::Response& res, int status, const std::string& what);

Json parse_json_body(const httplib::Request& req);

std::int64_t query_int(const httplib::Request& req, const std::string& key, std::int64_t fallback);

// Maps miniops::Error and std::exception thrown by handlers to JSON error replies.
void install_error_handler(httplib::Server& server);

/// Owns a listening server on a background thread. Port 0 binds an ephemeral port.
class ServerThread {
 public:
  ServerThread(std::shared_ptr<httplib::Server> server, const std::string& host, int port);
  ~ServerThread();

  ServerThread(const ServerThread&) = delete;
  ServerThread& operator=(const ServerThread&) = delete;

  int port() const { return port_; }
  Endpoint endpoint() const { return {host_, port_}; }
  void stop();

 private:
  std::shared_ptr<httplib::Server> server_;
  std::string host_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace miniops::http
