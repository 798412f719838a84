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

#include "miniops/incidents/service.hpp"

namespace miniops::incidents {

// POST /v1/tickets {title, description, attributes, severity, team_hint?}
// GET  /v1/tickets?team=&status=&q=, GET /v1/tickets/{id}
// POST /v1/tickets/{id}/transition {status, actor, revision?}
// POST /v1/tickets/{id}/comments {author, text, revision?}
// POST /v1/tickets/{id}/assign {assignee, revision?}
// GET  /v1/teams/{team}/queue
// POST /v1/triage-rules {rules}, GET /v1/triage-rules
// POST /v1/alert-incidents, POST /v1/alert-resolutions (alert dispatcher side)
void mount_routes(httplib::Server& server, IncidentService& service);

}  // namespace miniops::incidents
