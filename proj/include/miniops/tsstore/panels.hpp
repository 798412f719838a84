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

#include <string>
#include <vector>

#include <httplib.h>

#include "miniops/common/json.hpp"
#include "miniops/tsstore/metadata_store.hpp"

namespace miniops::tsstore {

enum class PanelKind { timeseries, single_stat, table };

const char* to_string(PanelKind k);
PanelKind parse_panel_kind(const std::string& s);  // Error(invalid_argument)

// A saved console view. The query is stored in canonical printed form.
struct Panel {
  std::string panel_id;
  std::string title;
  std::string query;
  int refresh_s = 30;
  PanelKind kind = PanelKind::timeseries;

  friend bool operator==(const Panel&, const Panel&) = default;
};

Json panel_to_json(const Panel& p);
Panel panel_from_json(const Json& j);

class PanelStore {
 public:
  explicit PanelStore(MetadataStore& meta) : meta_(meta) {}

  // Throws SqlError for an invalid query, Error(invalid_argument) for other fields.
  Panel put(Panel p);
  Panel get(const std::string& id) const;  // Error(not_found)
  std::vector<Panel> list() const;
  void erase(const std::string& id);  // Error(not_found)

 private:
  MetadataStore& meta_;
};

// POST /v1/panels, GET /v1/panels, GET/DELETE /v1/panels/{id}
void mount_panel_routes(httplib::Server& server, PanelStore& panels);

}  // namespace miniops::tsstore
