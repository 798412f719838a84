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

#include "miniops/common/http.hpp"

#include "miniops/common/record.hpp"

namespace miniops::http {

Endpoint parse_url(const std::string& url) {
  std::string rest = url;
  if (auto p = rest.find("://"); p != std::string::npos) rest = rest.substr(p + 3);
  if (auto p = rest.find('/'); p != std::string::npos) rest = rest.substr(0, p);
  Endpoint ep;
  auto colon = rest.rfind(':');
  if (colon == std::string::npos) {
    ep.host = rest;
    ep.port = 80;
  } else {
    ep.host = rest.substr(0, colon);
    try {
      ep.port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "bad port in url '" + url + "'");
    }
  }
  if (ep.host.empty()) throw Error(Errc::invalid_argument, "bad url '" + url + "'");
  return ep;
}

void reply_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& what) {
  reply_json(res, status, Json{{"error", what}});
}

Json parse_json_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed JSON body: ") + e.what());
  }
}

std::int64_t query_int(const httplib::Request& req, const std::string& key, std::int64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    auto n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "query parameter '" + key + "' must be an integer");
  }
}

void install_error_handler(httplib::Server& server) {
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), e.what());
    } catch (const SchemaError& e) {
      Json body{{"error", e.what()}};
      if (e.record_index()) body["record_index"] = *e.record_index();
      reply_json(res, 400, body);
    } catch (const Json::exception& e) {
      reply_error(res, 400, e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });
}

ServerThread::ServerThread(std::shared_ptr<httplib::Server> server, const std::string& host, int port)
    : server_(std::move(server)), host_(host) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw Error(Errc::unavailable, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([s = server_] { s->listen_after_bind(); });
  server_->wait_until_ready();
}

ServerThread::~ServerThread() { stop(); }

void ServerThread::stop() {
  if (thread_.joinable()) {
    server_->stop();
    thread_.join();
  }
}

}  // namespace miniops::http
