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

#include <httplib.h>

#include "miniops/common/json.hpp"
#include "miniops/tsstore/log_store.hpp"
#include "miniops/tsstore/query.hpp"
#include "miniops/tsstore/store.hpp"

namespace miniops::tsstore {

Json result_to_json(const QueryResult& r);
QueryResult result_from_json(const Json& j);

Json log_event_to_json(const LogEvent& e);
LogEvent log_event_from_json(const Json& j);
LogFilter log_filter_from_json(const Json& j);

// POST /v1/query {sql} -> {columns, rows}      (400 {error, column} on a parse error)
// POST /v1/parse {sql} -> {sql: canonical text}
// POST /v1/points {points: [{name, tags, server, ts, value}]} -> {accepted, rejected}
// POST /v1/logs {events: [...]}; POST /v1/logs/query {level, server, contains, from, to, limit}
// GET  /v1/stats, GET /v1/health
void mount_routes(httplib::Server& server, MetricStore& metrics, LogStore& logs);

}  // namespace miniops::tsstore
