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

#include "miniops/mqueue/broker.hpp"

namespace miniops::mqueue {

// POST /v1/queue/{topic}            raw payload body -> {"offset": n}
// GET  /v1/queue/{topic}?group=&max= -> {"messages": [{offset, payload, crc, enqueued_at}]}
// POST /v1/queue/{topic}/commit     {"group", "offset"}
// POST /v1/queue/{topic}/groups     {"group", "start": "earliest"|"head"}
// POST /v1/queue/{topic}/trim       -> {"reclaimed": n}
// GET  /v1/queue                    per-topic head and per-group lag
// Payloads travel as JSON strings over HTTP, so this surface carries UTF-8 text only.
void mount_routes(httplib::Server& server, Broker& broker);

}  // namespace miniops::mqueue
