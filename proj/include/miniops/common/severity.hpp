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

#include <optional>
#include <string>
#include <string_view>

namespace miniops {

// Ordered: a larger value ranks first in incident queues.
enum class Severity { info = 0, minor = 1, major = 2, critical = 3 };

const char* to_string(Severity s);
std::optional<Severity> parse_severity(std::string_view name);
Severity severity_or_throw(std::string_view name);  // Error(invalid_argument)

}  // namespace miniops
