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

#include "miniops/mqueue/http_service.hpp"

#include "miniops/common/http.hpp"

namespace miniops::mqueue {

namespace {

bool valid_utf8(std::string_view s) {
  try {
    (void)Json(std::string(s)).dump();
    return true;
  } catch (const Json::exception&) {
    return false;
  }
}

}  // namespace

void mount_routes(httplib::Server& server, Broker& broker) {
  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    http::reply_json(res, 200, Json{{"status", "up"}});
  });

  server.Get("/v1/queue", [&broker](const httplib::Request&, httplib::Response& res) {
    Json topics = Json::object();
    for (const auto& name : broker.topics()) {
      const TopicStats st = broker.stats(name);
      Json groups = Json::object();
      for (const auto& [g, c] : st.committed) groups[g] = Json{{"committed", c}, {"lag", st.head - c}};
      topics[name] = Json{{"first_offset", st.first_offset},
                          {"head", st.head},
                          {"segments", st.segments},
                          {"groups", std::move(groups)}};
    }
    http::reply_json(res, 200, Json{{"topics", std::move(topics)}});
  });

  server.Post(R"(/v1/queue/([a-z0-9._-]+))", [&broker](const httplib::Request& req, httplib::Response& res) {
    if (!valid_utf8(req.body)) throw Error(Errc::invalid_argument, "payload must be UTF-8 text");
    const auto offset = broker.publish(req.matches[1], req.body);
    http::reply_json(res, 200, Json{{"offset", offset}});
  });

  server.Get(R"(/v1/queue/([a-z0-9._-]+))", [&broker](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("group")) throw Error(Errc::invalid_argument, "missing 'group' parameter");
    const auto max = http::query_int(req, "max", 100);
    if (max < 0) throw Error(Errc::invalid_argument, "'max' must be non-negative");
    Json messages = Json::array();
    for (const auto& m : broker.poll(req.get_param_value("group"), req.matches[1], static_cast<std::size_t>(max))) {
      messages.push_back(
          Json{{"offset", m.offset}, {"payload", m.payload}, {"crc", m.crc}, {"enqueued_at", m.enqueued_at}});
    }
    http::reply_json(res, 200, Json{{"messages", std::move(messages)}});
  });

  server.Post(R"(/v1/queue/([a-z0-9._-]+)/commit)", [&broker](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    const std::string topic = req.matches[1];
    const std::string group = body.at("group").get<std::string>();
    broker.commit(group, topic, body.at("offset").get<std::uint64_t>());
    http::reply_json(res, 200, Json{{"committed", broker.committed(group, topic)}});
  });

  server.Post(R"(/v1/queue/([a-z0-9._-]+)/groups)", [&broker](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    const std::string start = body.value("start", "earliest");
    if (start != "earliest" && start != "head") throw Error(Errc::invalid_argument, "start must be earliest|head");
    broker.register_group(body.at("group").get<std::string>(), req.matches[1],
                          start == "earliest" ? StartAt::earliest : StartAt::head);
    http::reply_json(res, 200, Json{{"registered", true}});
  });

  server.Post(R"(/v1/queue/([a-z0-9._-]+)/trim)", [&broker](const httplib::Request& req, httplib::Response& res) {
    http::reply_json(res, 200, Json{{"reclaimed", broker.trim(req.matches[1])}});
  });
}

}  // namespace miniops::mqueue
