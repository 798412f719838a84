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

#include "miniops/alerting/http_service.hpp"

#include "miniops/common/http.hpp"

namespace miniops::alerting {

void mount_routes(httplib::Server& server, AlertEngine& engine, Dispatcher& dispatcher, const Clock& clock) {
  server.Post("/v1/rules/test", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    const AlertRule rule = rule_from_json(body.contains("rule") ? body["rule"] : body);
    const EpochMs now = body.value("now", clock.now_ms());
    Json out = Json::array();
    for (const auto& t : engine.evaluate(rule, now, true)) out.push_back(transition_to_json(t));
    http::reply_json(res, 200, Json{{"transitions", out}});
  });
  server.Post("/v1/rules", [&](const httplib::Request& req, httplib::Response& res) {
    const AlertRule rule = rule_from_json(http::parse_json_body(req));
    engine.put_rule(rule);
    http::reply_json(res, 200, rule_to_json(rule));
  });
  server.Get("/v1/rules", [&](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    for (const auto& r : engine.rules()) out.push_back(rule_to_json(r));
    http::reply_json(res, 200, Json{{"rules", out}});
  });
  server.Get(R"(/v1/rules/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    auto r = engine.find_rule(req.matches[1]);
    if (!r) throw Error(Errc::not_found, "unknown rule '" + std::string(req.matches[1]) + "'");
    http::reply_json(res, 200, rule_to_json(*r));
  });
  server.Delete(R"(/v1/rules/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    engine.delete_rule(req.matches[1]);
    http::reply_json(res, 200, Json{{"deleted", std::string(req.matches[1])}});
  });
  server.Get("/v1/alerts", [&](const httplib::Request& req, httplib::Response& res) {
    std::optional<AlertState> state;
    if (req.has_param("state")) state = parse_alert_state(req.get_param_value("state"));
    Json out = Json::array();
    for (const auto& a : engine.instances(state)) out.push_back(instance_to_json(a));
    http::reply_json(res, 200, Json{{"alerts", out}});
  });
  server.Get("/v1/alerting/stats", [&](const httplib::Request&, httplib::Response& res) {
    const auto s = engine.stats();
    const auto d = dispatcher.stats();
    http::reply_json(res, 200,
                     Json{{"evaluations", s.evaluations}, {"skipped", s.skipped}, {"forecast_skips", s.forecast_skips},
                          {"fired", s.fired}, {"resolved", s.resolved}, {"dispatch_pending", dispatcher.pending()},
                          {"dispatch_delivered", d.delivered}, {"dispatch_failures", d.failures}});
  });
}

}  // namespace miniops::alerting
