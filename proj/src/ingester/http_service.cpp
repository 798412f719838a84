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

#include "miniops/ingester/http_service.hpp"

#include "miniops/common/http.hpp"

namespace miniops::ingester {

void mount_routes(httplib::Server& server, Ingester& ingester) {
  server.Post("/v1/batch", [&](const httplib::Request& req, httplib::Response& res) {
    // httplib has already inflated a body sent with Content-Encoding: gzip.
    const bool inflated = req.get_header_value("Content-Encoding") == "gzip";
    const Ack ack = inflated ? ingester.receive_json(req.body) : ingester.receive_batch(req.body);
    http::reply_json(res, 200, Json{{"acked", ack.batch_id}, {"duplicate", ack.duplicate}, {"published", ack.published}});
  });
  server.Get("/v1/ingester/stats", [&](const httplib::Request&, httplib::Response& res) {
    const auto s = ingester.stats();
    http::reply_json(res, 200,
                     Json{{"batches", s.batches},
                          {"duplicates", s.duplicates},
                          {"rejected", s.rejected},
                          {"unavailable", s.unavailable},
                          {"records_published", s.records_published},
                          {"available", ingester.available()}});
  });
  server.Get("/v1/health", [&](const httplib::Request&, httplib::Response& res) {
    http::reply_json(res, ingester.available() ? 200 : 503, Json{{"status", ingester.available() ? "ok" : "unavailable"}});
  });
}

}  // namespace miniops::ingester
