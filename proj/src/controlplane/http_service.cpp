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

#include "miniops/controlplane/http_service.hpp"

#include "miniops/common/http.hpp"

namespace miniops::controlplane {

void mount_routes(httplib::Server& server, ControlPlane& cp) {
  server.Post("/v1/agents", [&](const httplib::Request& req, httplib::Response& res) {
    const auto ack = cp.register_agent(descriptor_from_json(http::parse_json_body(req)));
    http::reply_json(res, 200, Json{{"version", ack.version}, {"version_bumped", ack.version_bumped}});
  });
  server.Get("/v1/agents", [&](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    for (const auto& a : cp.agents()) {
      Json j = descriptor_to_json(a.descriptor);
      j["version"] = a.version;
      out.push_back(j);
    }
    http::reply_json(res, 200, Json{{"agents", out}});
  });
  server.Get(R"(/v1/agents/([^/]+)/tasks)", [&](const httplib::Request& req, httplib::Response& res) {
    http::reply_json(res, 200, agent::task_set_to_json(cp.compile_config(req.matches[1])));
  });

  server.Post("/v1/templates", [&](const httplib::Request& req, httplib::Response& res) {
    const auto affected = cp.plan_task(template_from_json(http::parse_json_body(req)));
    http::reply_json(res, 200, Json{{"affected", affected}});
  });
  server.Get("/v1/templates", [&](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    for (const auto& t : cp.templates()) out.push_back(template_to_json(t));
    http::reply_json(res, 200, Json{{"templates", out}});
  });
  server.Get(R"(/v1/templates/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    const auto t = cp.find_template(req.matches[1]);
    if (!t) throw Error(Errc::not_found, "unknown template '" + std::string(req.matches[1]) + "'");
    http::reply_json(res, 200, template_to_json(*t));
  });
  server.Delete(R"(/v1/templates/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    http::reply_json(res, 200, Json{{"affected", cp.unplan_task(req.matches[1])}});
  });

  server.Post("/v1/targets", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    TargetSelector s = body.contains("text") ? parse_selector(body["text"].get<std::string>())
                                             : selector_from_json(body.value("selector", Json::array()));
    http::reply_json(res, 200, Json{{"servers", cp.resolve_targets(s)}});
  });

  server.Post("/v1/executions", [&](const httplib::Request& req, httplib::Response& res) {
    cp.record_execution(execution_from_json(http::parse_json_body(req)));
    http::reply_json(res, 200, Json{{"ok", true}});
  });
  server.Get("/v1/executions", [&](const httplib::Request& req, httplib::Response& res) {
    ExecutionQuery q;
    if (req.has_param("task_id")) q.task_id = req.get_param_value("task_id");
    if (req.has_param("server_id")) q.server_id = req.get_param_value("server_id");
    q.from = http::query_int(req, "from", q.from);
    q.to = http::query_int(req, "to", q.to);
    Json out = Json::array();
    for (const auto& e : cp.query_executions(q)) out.push_back(execution_to_json(e));
    http::reply_json(res, 200, Json{{"executions", out}});
  });
  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    http::reply_json(res, 200, Json{{"status", "ok"}});
  });
}

}  // namespace miniops::controlplane
