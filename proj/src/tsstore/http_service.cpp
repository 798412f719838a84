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

#include "miniops/tsstore/http_service.hpp"

#include "miniops/common/http.hpp"
#include "miniops/tsstore/sql.hpp"

namespace miniops::tsstore {

Json result_to_json(const QueryResult& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json cells = Json::array();
    for (const auto& g : row.group) cells.push_back(g);
    cells.push_back(row.bucket_start);
    cells.push_back(row.value);
    rows.push_back(std::move(cells));
  }
  return Json{{"columns", r.columns}, {"rows", std::move(rows)}};
}

QueryResult result_from_json(const Json& j) {
  QueryResult r;
  r.columns = j.at("columns").get<std::vector<std::string>>();
  const std::size_t groups = r.columns.size() >= 2 ? r.columns.size() - 2 : 0;
  for (const auto& cells : j.at("rows")) {
    ResultRow row;
    for (std::size_t i = 0; i < groups; ++i) row.group.push_back(cells.at(i).get<std::string>());
    row.bucket_start = cells.at(groups).get<EpochMs>();
    row.value = cells.at(groups + 1).get<double>();
    r.rows.push_back(std::move(row));
  }
  return r;
}

Json log_event_to_json(const LogEvent& e) {
  return Json{{"ts", e.ts}, {"server", e.server}, {"level", e.level}, {"message", e.message}, {"fields", e.fields}};
}

LogEvent log_event_from_json(const Json& j) {
  LogEvent e;
  e.ts = j.at("ts").get<EpochMs>();
  e.server = j.value("server", "");
  e.level = j.value("level", "");
  e.message = j.at("message").get<std::string>();
  if (j.contains("fields")) e.fields = j.at("fields").get<TagMap>();
  return e;
}

LogFilter log_filter_from_json(const Json& j) {
  LogFilter f;
  if (j.contains("level")) f.level = j.at("level").get<std::string>();
  if (j.contains("server")) f.server = j.at("server").get<std::string>();
  if (j.contains("contains")) f.contains = j.at("contains").get<std::string>();
  if (j.contains("from")) f.from = j.at("from").get<EpochMs>();
  if (j.contains("to")) f.to = j.at("to").get<EpochMs>();
  if (j.contains("limit")) f.limit = j.at("limit").get<std::size_t>();
  return f;
}

namespace {

template <typename F>
void with_sql(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const SqlError& e) {
    http::reply_json(res, 400, Json{{"error", e.what()}, {"column", e.column()}});
  }
}

}  // namespace

void mount_routes(httplib::Server& server, MetricStore& metrics, LogStore& logs) {
  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    http::reply_json(res, 200, Json{{"status", "up"}});
  });

  server.Post("/v1/query", [&metrics](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    with_sql(res, [&] {
      const Query q = parse_query(body.at("sql").get<std::string>());
      http::reply_json(res, 200, result_to_json(metrics.query(q)));
    });
  });

  server.Post("/v1/parse", [](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    with_sql(res, [&] {
      http::reply_json(res, 200, Json{{"sql", print_query(parse_query(body.at("sql").get<std::string>()))}});
    });
  });

  server.Post("/v1/points", [&metrics](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    std::vector<MetricPoint> points;
    for (const auto& p : body.at("points")) {
      const TagMap tags = p.contains("tags") ? p.at("tags").get<TagMap>() : TagMap{};
      points.push_back(MetricPoint{SeriesKey(p.at("name").get<std::string>(), tags, p.at("server").get<std::string>()),
                                   p.at("ts").get<EpochMs>(), p.at("value").get<double>()});
    }
    const WriteResult r = metrics.write_points(points);
    http::reply_json(res, 200, Json{{"accepted", r.accepted}, {"rejected", r.rejected}});
  });

  server.Post("/v1/logs", [&logs](const httplib::Request& req, httplib::Response& res) {
    const Json body = http::parse_json_body(req);
    std::vector<LogEvent> events;
    for (const auto& e : body.at("events")) events.push_back(log_event_from_json(e));
    logs.store(events);
    http::reply_json(res, 200, Json{{"stored", events.size()}});
  });

  server.Post("/v1/logs/query", [&logs](const httplib::Request& req, httplib::Response& res) {
    const Json body = req.body.empty() ? Json::object() : http::parse_json_body(req);
    Json events = Json::array();
    for (const auto& e : logs.query(log_filter_from_json(body))) events.push_back(log_event_to_json(e));
    http::reply_json(res, 200, Json{{"events", std::move(events)}});
  });

  server.Get("/v1/stats", [&metrics, &logs](const httplib::Request&, httplib::Response& res) {
    const StoreStats st = metrics.stats();
    http::reply_json(res, 200,
                     Json{{"partitions", st.partitions},
                          {"sealed_partitions", st.sealed_partitions},
                          {"series", st.series},
                          {"sealed_bytes", st.sealed_bytes},
                          {"log_events", logs.size()}});
  });
}

}  // namespace miniops::tsstore
