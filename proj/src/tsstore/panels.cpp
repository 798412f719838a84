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

#include "miniops/tsstore/panels.hpp"

#include "miniops/common/error.hpp"
#include "miniops/common/http.hpp"
#include "miniops/tsstore/sql.hpp"

namespace miniops::tsstore {

namespace {
constexpr const char* kNamespace = "panels";
}

const char* to_string(PanelKind k) {
  switch (k) {
    case PanelKind::timeseries: return "timeseries";
    case PanelKind::single_stat: return "single_stat";
    case PanelKind::table: return "table";
  }
  return "?";
}

PanelKind parse_panel_kind(const std::string& s) {
  if (s == "timeseries") return PanelKind::timeseries;
  if (s == "single_stat") return PanelKind::single_stat;
  if (s == "table") return PanelKind::table;
  throw Error(Errc::invalid_argument, "unknown panel kind '" + s + "'");
}

Json panel_to_json(const Panel& p) {
  return Json{{"panel_id", p.panel_id}, {"title", p.title},        {"query", p.query},
              {"refresh_s", p.refresh_s}, {"kind", to_string(p.kind)}};
}

Panel panel_from_json(const Json& j) {
  Panel p;
  try {
    p.panel_id = j.at("panel_id").get<std::string>();
    p.title = j.value("title", "");
    p.query = j.at("query").get<std::string>();
    p.refresh_s = j.value("refresh_s", 30);
    p.kind = parse_panel_kind(j.value("kind", "timeseries"));
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad panel: ") + e.what());
  }
  return p;
}

Panel PanelStore::put(Panel p) {
  if (p.panel_id.empty()) throw Error(Errc::invalid_argument, "panel_id is required");
  if (p.refresh_s < 1) throw Error(Errc::invalid_argument, "refresh_s must be >= 1");
  p.query = print_query(parse_query(p.query));
  meta_.put(kNamespace, p.panel_id, panel_to_json(p));
  return p;
}

Panel PanelStore::get(const std::string& id) const {
  auto j = meta_.get(kNamespace, id);
  if (!j) throw Error(Errc::not_found, "no panel '" + id + "'");
  return panel_from_json(*j);
}

std::vector<Panel> PanelStore::list() const {
  std::vector<Panel> out;
  for (const auto& [id, j] : meta_.list(kNamespace)) out.push_back(panel_from_json(j));
  return out;
}

void PanelStore::erase(const std::string& id) {
  if (!meta_.erase(kNamespace, id)) throw Error(Errc::not_found, "no panel '" + id + "'");
}

void mount_panel_routes(httplib::Server& server, PanelStore& panels) {
  server.Post("/v1/panels", [&panels](const httplib::Request& req, httplib::Response& res) {
    const Panel in = panel_from_json(http::parse_json_body(req));
    try {
      http::reply_json(res, 200, panel_to_json(panels.put(in)));
    } catch (const SqlError& e) {
      http::reply_json(res, 400, Json{{"error", e.what()}, {"column", e.column()}});
    }
  });
  server.Get("/v1/panels", [&panels](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    for (const auto& p : panels.list()) out.push_back(panel_to_json(p));
    http::reply_json(res, 200, Json{{"panels", std::move(out)}});
  });
  server.Get(R"(/v1/panels/([^/]+))", [&panels](const httplib::Request& req, httplib::Response& res) {
    http::reply_json(res, 200, panel_to_json(panels.get(req.matches[1])));
  });
  server.Delete(R"(/v1/panels/([^/]+))", [&panels](const httplib::Request& req, httplib::Response& res) {
    panels.erase(req.matches[1]);
    http::reply_json(res, 200, Json{{"deleted", std::string(req.matches[1])}});
  });
}

}  // namespace miniops::tsstore
