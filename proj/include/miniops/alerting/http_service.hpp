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

#include "miniops/alerting/engine.hpp"

namespace miniops::alerting {

// POST /v1/rules (create or replace), GET /v1/rules, GET/DELETE /v1/rules/{id}
// POST /v1/rules/test {rule, now?} -> dry-run transitions
// GET /v1/alerts?state=pending|firing|resolved
// GET /v1/alerting/stats
void mount_routes(httplib::Server& server, AlertEngine& engine, Dispatcher& dispatcher, const Clock& clock);

}  // namespace miniops::alerting
