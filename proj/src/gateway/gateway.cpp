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

#include "miniops/gateway/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "miniops/common/error.hpp"

namespace miniops::gateway {

namespace {

const std::map<std::string, std::string>& segment_owners() {
  static const std::map<std::string, std::string> owners = {
      {"batch", "ingester"},         {"ingester", "ingester"},
      {"queue", "queue"},            {"query", "store"},
      {"parse", "store"},            {"points", "store"},
      {"logs", "store"},             {"stats", "store"},
      {"panels", "store"},           {"agents", "controlplane"},
      {"templates", "controlplane"}, {"targets", "controlplane"},
      {"executions", "controlplane"}, {"rules", "alerting"},
      {"alerts", "alerting"},        {"alerting", "alerting"},
      {"tickets", "incidents"},      {"teams", "incidents"},
      {"triage-rules", "incidents"}, {"alert-incidents", "incidents"},
      {"alert-resolutions", "incidents"},
  };
  return owners;
}

// POSTs that only read.
const std::vector<std::string> kReadOnlyPosts = {"/api/query", "/api/parse", "/api/logs/query", "/api/rules/test",
                                                 "/api/targets"};

std::string strip_query(const std::string& target) {
  auto q = target.find('?');
  return q == std::string::npos ? target : target.substr(0, q);
}

bool sane_request_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) { return c > 32 && c < 127; });
}

std::string new_request_id() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t salt = std::random_device{}() * 0x9e3779b97f4a7c15ull ^ std::random_device{}();
  char buf[32];
  std::snprintf(buf, sizeof buf, "gw-%016llx",
                static_cast<unsigned long long>(salt + counter.fetch_add(1) * 0x9e3779b97f4a7c15ull));
  return buf;
}

bool constant_time_equal(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  return diff == 0;
}

std::unique_ptr<httplib::Client> client_for(const std::string& base, int timeout_ms) {
  auto c = std::make_unique<httplib::Client>(base);
  const auto t = std::chrono::milliseconds(timeout_ms);
  c->set_connection_timeout(t);
  c->set_read_timeout(t);
  c->set_write_timeout(t);
  return c;
}

}  // namespace

void apply_env(GatewayConfig& config) {
  if (const char* t = std::getenv("MINIOPS_TOKEN"); t && *t) config.token = t;
  if (const char* a = std::getenv("MINIOPS_GATEWAY_ADDR"); a && *a) {
    const http::Endpoint ep = http::parse_url(a);
    config.host = ep.host;
    config.port = ep.port;
  }
}

const std::vector<Route>& routes() {
  static const std::vector<Route> table = [] {
    std::vector<Route> r = {
        {"GET", "/api/health", "gateway", false, "per-subsystem up/down, queue lag per group, store partitions"},
        {"GET", "/api/routes", "gateway", false, "this listing"},
        {"POST", "/api/batch", "ingester", true, "ingest one agent batch (JSON or gzip)"},
        {"GET", "/api/ingester/stats", "ingester", false, "ingester counters"},
        {"GET", "/api/queue", "queue", false, "topics with heads, segments and per-group lag"},
        {"POST", "/api/queue/{topic}", "queue", true, "publish one message"},
        {"GET", "/api/queue/{topic}", "queue", false, "poll ?group=&max="},
        {"POST", "/api/queue/{topic}/commit", "queue", true, "commit a group offset"},
        {"POST", "/api/queue/{topic}/groups", "queue", true, "register a consumer group"},
        {"POST", "/api/queue/{topic}/trim", "queue", true, "reclaim fully consumed segments"},
        {"POST", "/api/query", "store", false, "run a mini-SQL query {sql}"},
        {"POST", "/api/parse", "store", false, "validate and canonicalise {sql}"},
        {"POST", "/api/points", "store", true, "write metric points directly"},
        {"POST", "/api/logs", "store", true, "write log events directly"},
        {"POST", "/api/logs/query", "store", false, "filter log events"},
        {"GET", "/api/stats", "store", false, "store partitions, series and sealed bytes"},
        {"POST", "/api/panels", "store", true, "save a dashboard panel (query validated)"},
        {"GET", "/api/panels", "store", false, "list panels"},
        {"GET", "/api/panels/{id}", "store", false, "one panel"},
        {"DELETE", "/api/panels/{id}", "store", true, "delete a panel"},
        {"POST", "/api/agents", "controlplane", true, "register an agent"},
        {"GET", "/api/agents", "controlplane", false, "fleet inventory with config versions"},
        {"GET", "/api/agents/{id}/tasks", "controlplane", false, "compiled task set of one agent"},
        {"POST", "/api/templates", "controlplane", true, "plan a task template"},
        {"GET", "/api/templates", "controlplane", false, "list templates"},
        {"GET", "/api/templates/{id}", "controlplane", false, "one template"},
        {"DELETE", "/api/templates/{id}", "controlplane", true, "unplan a template"},
        {"POST", "/api/targets", "controlplane", false, "resolve a selector to servers"},
        {"POST", "/api/executions", "controlplane", true, "record an execution log"},
        {"GET", "/api/executions", "controlplane", false, "query execution logs"},
        {"POST", "/api/rules", "alerting", true, "create or replace an alert rule"},
        {"GET", "/api/rules", "alerting", false, "list rules"},
        {"GET", "/api/rules/{id}", "alerting", false, "one rule"},
        {"DELETE", "/api/rules/{id}", "alerting", true, "delete a rule, resolving its alerts"},
        {"POST", "/api/rules/test", "alerting", false, "dry-run a rule {rule, now}"},
        {"GET", "/api/alerts", "alerting", false, "alert instances ?state="},
        {"GET", "/api/alerting/stats", "alerting", false, "engine and dispatcher counters"},
        {"POST", "/api/tickets", "incidents", true, "create a ticket"},
        {"GET", "/api/tickets", "incidents", false, "list tickets ?team=&status=&q="},
        {"GET", "/api/tickets/{id}", "incidents", false, "one ticket"},
        {"POST", "/api/tickets/{id}/transition", "incidents", true, "move a ticket {to, actor, revision?}"},
        {"POST", "/api/tickets/{id}/comments", "incidents", true, "append a comment"},
        {"POST", "/api/tickets/{id}/assign", "incidents", true, "assign a ticket"},
        {"GET", "/api/teams/{team}/queue", "incidents", false, "ranked open tickets of a team"},
        {"POST", "/api/triage-rules", "incidents", true, "replace the triage rule list"},
        {"GET", "/api/triage-rules", "incidents", false, "current triage rules"},
        {"POST", "/api/alert-incidents", "incidents", true, "idempotent ticket creation from an alert"},
        {"POST", "/api/alert-resolutions", "incidents", true, "note an alert resolution on its ticket"},
    };
    return r;
  }();
  return table;
}

Json routes_json() {
  Json out = Json::array();
  for (const auto& r : routes()) {
    out.push_back(Json{{"method", r.method},
                       {"path", r.path},
                       {"upstream", r.upstream},
                       {"auth", r.mutating ? "bearer" : "none"},
                       {"summary", r.summary}});
  }
  return Json{{"routes", out}};
}

std::string routes_markdown() {
  std::string out = "# Gateway routes\n\n"
                    "Every route below `/api` forwards to the owning service at the same path under `/v1`.\n"
                    "Routes marked `bearer` need `Authorization: Bearer $MINIOPS_TOKEN`.\n\n"
                    "| Method | Path | Service | Auth | Summary |\n|---|---|---|---|---|\n";
  for (const auto& r : routes()) {
    out += "| " + r.method + " | `" + r.path + "` | " + r.upstream + " | " + (r.mutating ? "bearer" : "none") + " | " +
           r.summary + " |\n";
  }
  return out;
}

std::string upstream_for(const std::string& api_path) {
  const std::string path = strip_query(api_path);
  if (path.rfind("/api/", 0) != 0) return "";
  const std::string rest = path.substr(5);
  const std::string segment = rest.substr(0, rest.find('/'));
  auto it = segment_owners().find(segment);
  return it == segment_owners().end() ? "" : it->second;
}

bool is_mutation(const std::string& method, const std::string& api_path) {
  if (method == "GET" || method == "HEAD" || method == "OPTIONS") return false;
  const std::string path = strip_query(api_path);
  return std::find(kReadOnlyPosts.begin(), kReadOnlyPosts.end(), path) == kReadOnlyPosts.end() || method != "POST";
}

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)) {
  if (config_.token.empty()) throw Error(Errc::invalid_argument, "a bearer token is required (MINIOPS_TOKEN)");
}

Gateway::~Gateway() { stop(); }

bool Gateway::authorized(const httplib::Request& req) const {
  const std::string h = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (h.rfind(prefix, 0) != 0) return false;
  return constant_time_equal(h.substr(prefix.size()), config_.token);
}

void Gateway::proxy(const httplib::Request& req, httplib::Response& res) {
  const std::string path = strip_query(req.target);
  const std::string service = upstream_for(path);
  if (service.empty()) {
    http::reply_error(res, 404, "no route for " + path);
    return;
  }
  if (is_mutation(req.method, path) && !authorized(req)) {
    res.set_header("WWW-Authenticate", "Bearer");
    http::reply_error(res, 401, "missing or invalid bearer token");
    return;
  }
  auto up = config_.upstreams.find(service);
  if (up == config_.upstreams.end()) {
    http::reply_json(res, 502, Json{{"error", "upstream '" + service + "' is not configured"}, {"upstream", service}});
    return;
  }
  const std::string target = "/v1" + req.target.substr(4);
  httplib::Headers headers;
  headers.emplace("X-Request-Id", res.get_header_value("X-Request-Id"));
  if (req.has_header("Accept")) headers.emplace("Accept", req.get_header_value("Accept"));
  const std::string content_type =
      req.has_header("Content-Type") ? req.get_header_value("Content-Type") : "application/json";

  auto client = client_for(up->second, config_.upstream_timeout_ms);
  // httplib inflated a gzip body on the way in; send it on the way it came
  client->set_compress(req.get_header_value("Content-Encoding") == "gzip");
  httplib::Result r;
  if (req.method == "GET") r = client->Get(target, headers);
  else if (req.method == "POST") r = client->Post(target, headers, req.body, content_type);
  else if (req.method == "PUT") r = client->Put(target, headers, req.body, content_type);
  else if (req.method == "PATCH") r = client->Patch(target, headers, req.body, content_type);
  else if (req.method == "DELETE") r = client->Delete(target, headers, req.body, content_type);
  else {
    http::reply_error(res, 405, "method " + req.method + " not supported");
    return;
  }
  if (!r) {
    http::reply_json(res, 502,
                     Json{{"error", "upstream '" + service + "' unreachable: " + httplib::to_string(r.error())},
                          {"upstream", service}});
    return;
  }
  res.status = r->status;
  const std::string type = r->has_header("Content-Type") ? r->get_header_value("Content-Type") : "application/json";
  res.set_content(r->body, type);
}

Json Gateway::health() const {
  Json subsystems = Json::object();
  bool all_up = true;
  for (const auto& [name, base] : config_.upstreams) {
    auto c = client_for(base, config_.health_timeout_ms);
    auto r = c->Get("/v1/health");
    const bool up = r && r->status == 200;
    subsystems[name] = up ? "up" : "down";
    all_up = all_up && up;
  }
  Json lag = Json::object();
  if (auto it = config_.upstreams.find("queue"); it != config_.upstreams.end() && subsystems[it->first] == "up") {
    auto r = client_for(it->second, config_.health_timeout_ms)->Get("/v1/queue");
    if (r && r->status == 200) {
      const Json doc = Json::parse(r->body);
      for (const auto& [topic, st] : doc.at("topics").items()) {
        Json groups = Json::object();
        for (const auto& [g, gs] : st.at("groups").items()) groups[g] = gs.at("lag");
        lag[topic] = groups;
      }
    }
  }
  Json partitions = nullptr;
  if (auto it = config_.upstreams.find("store"); it != config_.upstreams.end() && subsystems[it->first] == "up") {
    auto r = client_for(it->second, config_.health_timeout_ms)->Get("/v1/stats");
    if (r && r->status == 200) partitions = Json::parse(r->body).at("partitions");
  }
  return Json{{"status", all_up ? "ok" : "degraded"},
              {"subsystems", subsystems},
              {"queue_lag", lag},
              {"store_partitions", partitions}};
}

void Gateway::mount(httplib::Server& server) {
  http::install_error_handler(server);

  server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    const std::string incoming = req.get_header_value("X-Request-Id");
    res.set_header("X-Request-Id", sane_request_id(incoming) ? incoming : new_request_id());
    const std::string origin = req.get_header_value("Origin");
    if (!origin.empty() &&
        std::find(config_.cors_origins.begin(), config_.cors_origins.end(), origin) != config_.cors_origins.end()) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
      res.set_header("Access-Control-Expose-Headers", "X-Request-Id");
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, PATCH, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, X-Request-Id");
    res.set_header("Access-Control-Max-Age", "600");
  });

  server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
    http::reply_json(res, 200, health());
  });
  server.Get("/api/routes", [](const httplib::Request&, httplib::Response& res) {
    http::reply_json(res, 200, routes_json());
  });

  auto forward = [this](const httplib::Request& req, httplib::Response& res) { proxy(req, res); };
  server.Get(R"(/api/.*)", forward);
  server.Post(R"(/api/.*)", forward);
  server.Put(R"(/api/.*)", forward);
  server.Patch(R"(/api/.*)", forward);
  server.Delete(R"(/api/.*)", forward);

  if (config_.static_dir) server.set_mount_point("/", config_.static_dir->string());
}

void Gateway::start() {
  auto srv = std::make_shared<httplib::Server>();
  mount(*srv);
  server_ = std::make_unique<http::ServerThread>(srv, config_.host, config_.port);
}

void Gateway::stop() {
  if (server_) server_->stop();
  server_.reset();
}

std::string Gateway::url() const {
  if (!server_) throw Error(Errc::unavailable, "gateway is not running");
  return server_->endpoint().url();
}

}  // namespace miniops::gateway
