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

#include "miniops/incidents/http_service.hpp"

#include "miniops/common/http.hpp"

namespace miniops::incidents {

namespace {

std::optional<std::uint64_t> revision_of(const Json& body) {
  if (!body.contains("revision") || body["revision"].is_null()) return std::nullopt;
  return body["revision"].get<std::uint64_t>();
}

Json ticket_list(const std::vector<Ticket>& tickets) {
  Json out = Json::array();
  for (const auto& t : tickets) out.push_back(ticket_to_json(t));
  return out;
}

}  // namespace

void mount_routes(httplib::Server& server, IncidentService& service) {
  server.Post("/v1/tickets", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    CreateRequest c;
    c.title = body.value("title", "");
    c.description = body.value("description", "");
    c.attributes = body.value("attributes", TagMap{});
    c.severity = severity_or_throw(body.value("severity", std::string("minor")));
    c.team_hint = body.value("team_hint", "");
    http::reply_json(res, 201, ticket_to_json(service.create_ticket(c)));
  });
  server.Get("/v1/tickets", [&](const httplib::Request& req, httplib::Response& res) {
    TicketFilter f;
    if (req.has_param("team")) f.team = req.get_param_value("team");
    if (req.has_param("status")) f.status = parse_status(req.get_param_value("status"));
    if (req.has_param("q")) f.text = req.get_param_value("q");
    http::reply_json(res, 200, Json{{"tickets", ticket_list(service.list(f))}});
  });
  server.Get(R"(/v1/tickets/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    http::reply_json(res, 200, ticket_to_json(service.get(req.matches[1])));
  });
  server.Post(R"(/v1/tickets/([^/]+)/transition)", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    const auto t = service.transition(req.matches[1], parse_status(body.at("status").get<std::string>()),
                                      body.value("actor", ""), revision_of(body));
    http::reply_json(res, 200, ticket_to_json(t));
  });
  server.Post(R"(/v1/tickets/([^/]+)/comments)", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    const auto t =
        service.add_comment(req.matches[1], body.value("author", ""), body.value("text", ""), revision_of(body));
    http::reply_json(res, 200, ticket_to_json(t));
  });
  server.Post(R"(/v1/tickets/([^/]+)/assign)", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    http::reply_json(res, 200,
                     ticket_to_json(service.assign(req.matches[1], body.value("assignee", ""), revision_of(body))));
  });
  server.Get(R"(/v1/teams/([^/]+)/queue)", [&](const httplib::Request& req, httplib::Response& res) {
    http::reply_json(res, 200, Json{{"team", std::string(req.matches[1])}, {"tickets", ticket_list(service.queue(req.matches[1]))}});
  });
  server.Post("/v1/triage-rules", [&](const httplib::Request& req, httplib::Response& res) {
    service.set_triage_rules(rules_from_json(http::parse_json_body(req)));
    http::reply_json(res, 200, Json{{"rules", rules_to_json(service.triage_rules())}});
  });
  server.Get("/v1/triage-rules", [&](const httplib::Request&, httplib::Response& res) {
    http::reply_json(res, 200, Json{{"rules", rules_to_json(service.triage_rules())}});
  });
  server.Post("/v1/alert-incidents", [&](const httplib::Request& req, httplib::Response& res) {
    TicketActionSink sink(service);
    const auto id = sink.create_incident(alerting::incident_request_from_json(http::parse_json_body(req)));
    http::reply_json(res, 200, Json{{"ticket_id", id}});
  });
  server.Post("/v1/alert-resolutions", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    const bool noted = service.link_alert_resolution(body.at("source_key").get<std::string>(), body.at("at").get<EpochMs>());
    http::reply_json(res, 200, Json{{"noted", noted}});
  });
}

}  // namespace miniops::incidents
