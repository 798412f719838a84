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

#include "miniops/controlplane/controlplane.hpp"

namespace miniops::controlplane {

// POST /v1/agents, GET /v1/agents, GET /v1/agents/{id}/tasks
// POST /v1/templates, GET /v1/templates, GET /v1/templates/{id}, DELETE /v1/templates/{id}
// POST /v1/targets {selector} -> {servers}
// POST /v1/executions, GET /v1/executions?task_id=&server_id=&from=&to=
void mount_routes(httplib::Server& server, ControlPlane& cp);

}  // namespace miniops::controlplane
